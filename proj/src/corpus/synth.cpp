#include "mwp/corpus/synth.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "mwp/equations/reward.hpp"
#include "mwp/equations/solver.hpp"
#include "mwp/model/config.hpp"

namespace mwp {

namespace {

using Rng = std::mt19937_64;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(items.size()) - 1))];
}

std::string num(long v) { return std::to_string(v); }

// Text plus gold equations; answers come from solving the equations.
struct Draft {
  std::string text;
  std::string equations;
};

using Family = std::function<Draft(Rng&)>;

Draft sum_diff(Rng& rng) {
  const int y = uniform(rng, 1, 40), d = uniform(rng, 1, 40);
  const int x = y + d, s = x + y;
  const std::string eq = "x+y=" + num(s) + "; x-y=" + num(d);
  switch (uniform(rng, 0, 2)) {
    case 0:
      return {"The sum of two numbers is " + num(s) + " and their difference is " + num(d) +
                  ". What are the two numbers?",
              eq};
    case 1:
      return {"Two numbers add up to " + num(s) + ". One of them is " + num(d) +
                  " more than the other. Find both numbers.",
              eq};
    default:
      return {"The difference of two numbers is " + num(d) + " and their sum is " + num(s) +
                  ". Find the numbers.",
              eq};
  }
}

Draft linear(Rng& rng) {
  const int a = uniform(rng, 2, 9), x = uniform(rng, 1, 25), b = uniform(rng, 1, 40);
  const int c = a * x + b;
  const std::string eq = num(a) + "*x+" + num(b) + "=" + num(c);
  switch (uniform(rng, 0, 2)) {
    case 0:
      return {"When a number is multiplied by " + num(a) + " and then increased by " + num(b) +
                  ", the result is " + num(c) + ". Find the number.",
              eq};
    case 1:
      return {num(a) + " times a number plus " + num(b) + " equals " + num(c) +
                  ". What is the number?",
              eq};
    default:
      return {"Tom bought " + num(a) + " notebooks and a pen that cost " + num(b) +
                  " dollars. He spent " + num(c) +
                  " dollars in total. How much did each notebook cost?",
              eq};
  }
}

Draft ratio(Rng& rng) {
  const int n = 20 * uniform(rng, 1, 20);
  switch (uniform(rng, 0, 2)) {
    case 0: {
      const int p = pick(rng, std::vector<int>{5, 10, 15, 20, 25, 30, 40, 45, 60, 75, 80, 90});
      const std::string frac = *to_decimal_string(Rational(p, 100));
      return {"What is " + num(p) + "% of " + num(n) + "?", "x=" + frac + "*" + num(n)};
    }
    case 1: {
      const int p = pick(rng, std::vector<int>{10, 20, 25, 30, 40, 50, 60, 70, 75, 80});
      const std::string frac = *to_decimal_string(Rational(p, 100));
      return {"A class has " + num(n) + " students and " + num(p) +
                  "% of them walk to school. How many students walk to school?",
              "x=" + frac + "*" + num(n)};
    }
    default: {
      const std::string d =
          pick(rng, std::vector<std::string>{"0.2", "0.25", "0.4", "0.5", "0.6", "0.75", "0.8"});
      return {"A tank holds " + num(n) + " liters of water and is " + d +
                  " full. How many liters are in the tank?",
              "x=" + d + "*" + num(n)};
    }
  }
}

Draft consecutive(Rng& rng) {
  switch (uniform(rng, 0, 2)) {
    case 0: {
      const int x = uniform(rng, 1, 60);
      return {"The sum of two consecutive integers is " + num(2 * x + 1) +
                  ". What is the smaller integer?",
              "x+(x+1)=" + num(2 * x + 1)};
    }
    case 1: {
      const int x = uniform(rng, 1, 50);
      return {"The sum of three consecutive integers is " + num(3 * x + 3) +
                  ". Find the smallest of them.",
              "x+(x+1)+(x+2)=" + num(3 * x + 3)};
    }
    default: {
      const int x = 2 * uniform(rng, 1, 40);
      return {"Two consecutive even numbers add up to " + num(2 * x + 2) +
                  ". What is the smaller one?",
              "x+(x+2)=" + num(2 * x + 2)};
    }
  }
}

Draft quadratic_area(Rng& rng) {
  switch (uniform(rng, 0, 2)) {
    case 0: {
      const int k = uniform(rng, 2, 25);
      return {"A square garden has an area of " + num(k * k) +
                  " square meters. How long is each side in meters?",
              "x^2=" + num(k * k)};
    }
    case 1: {
      const int k = uniform(rng, 2, 25);
      return {"The square of a number is " + num(k * k) + ". What is the number?",
              "x^2=" + num(k * k)};
    }
    default: {
      const int w = uniform(rng, 1, 20), d = uniform(rng, 1, 12);
      return {"A rectangle is " + num(d) + " meters longer than it is wide and its area is " +
                  num(w * (w + d)) + " square meters. How wide is it?",
              "x*(x+" + num(d) + ")=" + num(w * (w + d))};
    }
  }
}

Draft three_var(Rng& rng) {
  const int z = uniform(rng, 1, 30), b = uniform(rng, 1, 20), a = uniform(rng, 1, 20);
  const int y = z + b, x = y + a, t = x + y + z;
  const std::string eq = "x+y+z=" + num(t) + "; x-y=" + num(a) + "; y-z=" + num(b);
  if (uniform(rng, 0, 1) == 0) {
    return {"Three friends have " + num(t) + " dollars in total. Ann has " + num(a) +
                " dollars more than Ben, and Ben has " + num(b) +
                " dollars more than Cara. How much does each of them have?",
            eq};
  }
  return {"The total of three numbers is " + num(t) + ". The first is " + num(a) +
              " more than the second, and the second is " + num(b) +
              " more than the third. Find the three numbers.",
          eq};
}

Draft temperature(Rng& rng) {
  const int m = -uniform(rng, 1, 25), r = uniform(rng, 1, 40);
  const std::string eq = "x=" + num(m) + "+" + num(r);
  switch (uniform(rng, 0, 2)) {
    case 0:
      return {"The temperature at dawn was " + num(m) + " degrees. By noon it had risen by " +
                  num(r) + " degrees. What was the temperature at noon?",
              eq};
    case 1:
      return {"A diver is at " + num(m) + " meters and rises " + num(r) +
                  " meters. At what depth is the diver now?",
              eq};
    default:
      return {"The balance of an account is " + num(m) + " dollars. After a deposit of " +
                  num(r) + " dollars, what is the new balance?",
              eq};
  }
}

Draft recipe(Rng& rng) {
  const int q = pick(rng, std::vector<int>{2, 3, 4, 5, 8});
  int p = uniform(rng, 1, q - 1);
  while (std::gcd(p, q) != 1) p = uniform(rng, 1, q - 1);
  const int w = uniform(rng, 1, 4), n = uniform(rng, 2, 12);
  const std::string mixed = num(w) + " " + num(p) + "/" + num(q);
  const std::string eq = "x=" + num(n) + "*(" + num(w * q + p) + "/" + num(q) + ")";
  switch (uniform(rng, 0, 2)) {
    case 0:
      return {"A recipe needs " + mixed + " cups of flour for one cake. How many cups are needed for " +
                  num(n) + " cakes?",
              eq};
    case 1:
      return {"Each bag of sand weighs " + mixed + " kilograms. What is the total weight of " +
                  num(n) + " bags?",
              eq};
    default:
      return {"Sam walks " + mixed + " miles every day. How far does Sam walk in " + num(n) +
                  " days?",
              eq};
  }
}

const std::vector<std::pair<std::string, Family>>& families() {
  static const std::vector<std::pair<std::string, Family>> f = {
      {"sum_diff", sum_diff},       {"linear", linear},
      {"ratio", ratio},             {"consecutive", consecutive},
      {"quadratic_area", quadratic_area}, {"three_var", three_var},
      {"temperature", temperature}, {"recipe", recipe}};
  return f;
}

const std::vector<std::string>& distractors() {
  static const std::vector<std::string> d = {
      "The school is {} kilometers from the park.", "There are {} pages in the notebook.",
      "The bus left {} minutes late.", "A box on the shelf holds {} pencils."};
  return d;
}

void add_distractor(Rng& rng, Draft& draft) {
  std::set<Rational> taken;
  for (const auto& n : extract_numbers(draft.text)) taken.insert(n.value);
  int k = uniform(rng, 11, 99);
  while (taken.count(Rational(k)) != 0) k = uniform(rng, 11, 99);
  std::string sentence = pick(rng, distractors());
  sentence.replace(sentence.find("{}"), 2, num(k));
  draft.text = sentence + " " + draft.text;
}

// Aligns and re-solves the draft; nullopt when it does not round-trip.
std::optional<Problem> finish(const Draft& draft, const std::string& family) {
  const SolutionSet gold = solve(parse_equations(draft.equations));
  if (gold.status != SolutionStatus::kSolved) return std::nullopt;
  Problem p;
  p.text = draft.text;
  p.equations = draft.equations;
  p.template_source = family;
  for (const auto& a : gold.assignments) {
    if (!a.value.exact) return std::nullopt;
    p.answers.push_back(*a.value.exact);
  }
  Preprocessed pre = preprocess(p);
  if (!pre.equation_template) return std::nullopt;
  NumberMapping mapping{pre.numbers};
  if (judge(pre.equation_template->tokens, mapping, p.answers).verdict != Verdict::kCorrect) {
    return std::nullopt;
  }
  p.equation_template = std::move(pre.equation_template);
  return p;
}

}  // namespace

const std::vector<std::string>& synth_template_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : families()) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<Problem> generate_problems(const SynthOptions& options) {
  if (options.distractor_rate < 0.0 || options.distractor_rate > 1.0) {
    throw ConfigError("distractor rate must lie in [0, 1]");
  }
  std::vector<const std::pair<std::string, Family>*> chosen;
  if (options.templates.empty()) {
    for (const auto& f : families()) chosen.push_back(&f);
  } else {
    for (const auto& name : options.templates) {
      auto it = std::find_if(families().begin(), families().end(),
                             [&](const auto& f) { return f.first == name; });
      if (it == families().end()) throw ConfigError("unknown template '" + name + "'");
      chosen.push_back(&*it);
    }
  }

  Rng rng(options.seed);
  std::bernoulli_distribution distract(options.distractor_rate);
  std::vector<Problem> out;
  out.reserve(options.count);
  while (out.size() < options.count) {
    const auto& [name, family] = *chosen[out.size() % chosen.size()];
    std::optional<Problem> p;
    for (int attempt = 0; attempt < 100 && !p; ++attempt) {
      Draft draft = family(rng);
      if (distract(rng)) add_distractor(rng, draft);
      p = finish(draft, name);
    }
    if (!p) throw std::logic_error("template '" + name + "' keeps producing unsolvable problems");
    p->id = "syn-" + std::to_string(out.size());
    out.push_back(std::move(*p));
  }
  return out;
}

}  // namespace mwp

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "mwp/equations/ast.hpp"
#include "mwp/equations/solver.hpp"
#include "mwp/numbering/numbering.hpp"

using namespace mwp;

namespace {

Rational R(const char* s) { return *parse_rational(s); }

EquationTemplate T(const char* s) { return EquationTemplate::from_text(s); }

NumberMapping mapping_of(const std::string& text) { return NumberMapping{extract_numbers(text)}; }

bool contains(const std::vector<Rational>& v, const Rational& r) {
  return std::find(v.begin(), v.end(), r) != v.end();
}

}  // namespace

TEST_CASE("extraction examples") {
  auto a = extract_numbers("sum is 27 and difference is 3");
  REQUIRE(a.size() == 2);
  CHECK(a[0].value == 27);
  CHECK(a[0].kind == NumberKind::kOther);
  CHECK(a[0].index == 1);
  CHECK(a[1].value == 3);
  CHECK(a[1].index == 2);

  auto b = extract_numbers("goes through -15 and 0.25");
  REQUIRE(b.size() == 2);
  CHECK(b[0].value == -15);
  CHECK(b[0].kind == NumberKind::kNegative);
  CHECK(b[1].value == R("1/4"));
  CHECK(b[1].kind == NumberKind::kUnitFraction);

  auto c = extract_numbers("3 1/3 cups");
  REQUIRE(c.size() == 1);
  CHECK(c[0].value == R("10/3"));
  CHECK(c[0].kind == NumberKind::kOther);
  CHECK(c[0].form == NumberForm::kMixed);
  CHECK(c[0].surface == "3 1/3");

  CHECK(extract_numbers("no numbers here").empty());
}

TEST_CASE("extraction grammar") {
  auto n = extract_numbers("paid 1,200 dollars, 5% tax, 1/3 of it, 2.5 kg, .75 l and 12,34");
  REQUIRE(n.size() == 7);
  CHECK(n[0].value == 1200);
  CHECK(n[1].value == R("1/20"));
  CHECK(n[1].form == NumberForm::kPercent);
  CHECK(n[1].kind == NumberKind::kUnitFraction);
  CHECK(n[2].value == R("1/3"));
  CHECK(n[2].form == NumberForm::kFraction);
  CHECK(n[3].value == R("5/2"));
  CHECK(n[4].value == R("3/4"));
  // "12,34" is not a thousands group: two numbers.
  CHECK(n[5].value == 12);
  CHECK(n[6].value == 34);

  auto m = extract_numbers("10-5 and a-3 but -4");
  REQUIRE(m.size() == 4);
  CHECK(m[0].value == 10);
  CHECK(m[1].value == 5);
  CHECK(m[2].value == 3);  // a minus glued to a word is a hyphen
  CHECK(m[3].value == -4);

  // Letters glued to digits do not start a number.
  CHECK(extract_numbers("room b12").empty());

  auto zero = extract_numbers("0 and 1");
  CHECK(zero[0].kind == NumberKind::kOther);
  CHECK(zero[1].kind == NumberKind::kOther);
}

TEST_CASE("extraction is deterministic with increasing indices") {
  const std::string text = "At -3 degrees, 4 1/2 cups, 0.5 of 200 and 15% of 60.";
  const auto a = extract_numbers(text), b = extract_numbers(text);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].begin == b[i].begin);
    CHECK(a[i].index == i + 1);
    if (i > 0) CHECK(a[i].begin > a[i - 1].begin);
    CHECK(text.substr(a[i].begin, a[i].end - a[i].begin) == a[i].surface);
    CHECK(a[i].kind == kind_of(a[i].value));
  }
}

TEST_CASE("variants") {
  const auto mixed = variants(extract_numbers("3 1/3")[0]);
  CHECK(mixed.front() == R("10/3"));
  CHECK(contains(mixed, R("3.33")));
  CHECK(contains(mixed, R("3.333")));
  CHECK(contains(mixed, R("3.3333")));
  CHECK(contains(mixed, R("3.3")));
  CHECK(contains(mixed, Rational(3)));
  CHECK(contains(mixed, R("1/3")));

  const auto five = variants(extract_numbers("5")[0]);
  CHECK(five == std::vector<Rational>{5});

  const auto pct = variants(extract_numbers("5%")[0]);
  CHECK(pct == std::vector<Rational>{R("1/20"), 5});

  const auto two_thirds = variants(extract_numbers("2/3")[0]);
  CHECK(contains(two_thirds, R("0.67")));  // rounded
  CHECK(contains(two_thirds, R("0.66")));  // truncated
}

TEST_CASE("symbols and lookup") {
  CHECK(make_symbol(NumberKind::kNegative, 2) == "M_2");
  CHECK(make_symbol(NumberKind::kUnitFraction, 1) == "F_1");
  CHECK(make_symbol(NumberKind::kOther, 12) == "N_12");
  CHECK(parse_symbol("N_12")->index == 12);
  CHECK_FALSE(parse_symbol("N_0"));
  CHECK_FALSE(parse_symbol("X_1"));
  CHECK_FALSE(parse_symbol("N1"));

  const NumberMapping m = mapping_of("-15 then 0.25 then 70");
  CHECK(*m.lookup("M_1") == -15);
  CHECK(*m.lookup("F_2") == R("1/4"));
  CHECK(*m.lookup("N_3") == 70);
  CHECK_FALSE(m.lookup("N_1"));  // kind mismatch
  CHECK_FALSE(m.lookup("N_4"));  // out of range
}

TEST_CASE("alignment examples") {
  CHECK(align(extract_numbers("2 apples, 3 pears, 7 total"), "2*x+3=7").text() ==
        "N_1 * x + N_2 = N_3");
  CHECK(align(extract_numbers("3 red and 3 blue"), "3+3=x").text() == "N_1 + N_2 = x");
  CHECK_THROWS_AS(align(extract_numbers("2 and 5"), "x+19=2"), UnalignableError);
  // Whitelisted literals stay numeric when no text number matches.
  CHECK(align(extract_numbers("2 and 5"), "x+9=2").text() == "x + 9 = N_1");
}

TEST_CASE("alignment details") {
  SUBCASE("exponents stay literal") {
    CHECK(align(extract_numbers("area 2 and 9"), "x^2=9").text() == "x ^ 2 = N_2");
  }
  SUBCASE("a leading minus folds into a negative text number") {
    CHECK(align(extract_numbers("was -7 then rose 12"), "x=-7+12").text() == "x = M_1 + N_2");
  }
  SUBCASE("a quotient of literals matches a fraction in the text") {
    CHECK(align(extract_numbers("needs 3 1/3 cups for 6 cakes"), "x=6*(10/3)").text() ==
          "x = N_2 * ( N_1 )");
  }
  SUBCASE("rounded decimals match their source") {
    CHECK(align(extract_numbers("3 1/3 of 9"), "x=3.33*9").text() == "x = N_1 * N_2");
  }
  SUBCASE("percent as written amount") {
    CHECK(align(extract_numbers("5% of 80"), "x=5/100*80").text() == "x = F_1 * N_2");
    CHECK(align(extract_numbers("15% of 80"), "x=15*80/100").text() == "x = F_1 * N_2 / 100");
  }
  SUBCASE("a used number is reused only as a last resort") {
    CHECK(align(extract_numbers("12 of them"), "x=12+12").text() == "x = N_1 + N_1");
  }
  SUBCASE("gold equations must parse") {
    CHECK_THROWS_AS(align(extract_numbers("2"), "2*x+=3"), ParseError);
  }
}

TEST_CASE("alignment agrees with brute force and ignores search order") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int count = std::uniform_int_distribution<int>(2, 6)(rng);
    std::vector<int> values;
    while (static_cast<int>(values.size()) < count) {
      const int v = std::uniform_int_distribution<int>(11, 99)(rng);
      if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
    }
    std::string text = "we have";
    for (int v : values) text += " " + std::to_string(v) + " items,";
    // Gold uses a random arrangement of a random subset of the numbers.
    std::vector<int> used = values;
    std::shuffle(used.begin(), used.end(), rng);
    used.resize(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, count)(rng)));
    std::string gold = "x=";
    for (std::size_t i = 0; i < used.size(); ++i) {
      if (i) gold += (i % 2) ? "+" : "*";
      gold += std::to_string(used[i]);
    }
    const auto numbers = extract_numbers(text);

    // Brute force: every injective literal -> number map with equal values.
    std::vector<std::vector<std::size_t>> solutions;
    std::vector<std::size_t> pick(used.size());
    std::vector<bool> taken(numbers.size(), false);
    std::function<void(std::size_t)> enumerate = [&](std::size_t s) {
      if (s == used.size()) {
        solutions.push_back(pick);
        return;
      }
      for (std::size_t n = 0; n < numbers.size(); ++n) {
        if (taken[n] || numbers[n].value != used[s]) continue;
        taken[n] = true;
        pick[s] = n;
        enumerate(s + 1);
        taken[n] = false;
      }
    };
    enumerate(0);
    REQUIRE(solutions.size() == 1);
    std::string expected = "x =";
    for (std::size_t i = 0; i < used.size(); ++i) {
      if (i) expected += (i % 2) ? " +" : " *";
      expected += " " + numbers[solutions[0][i]].symbol();
    }

    const std::string got = align(numbers, gold).text();
    CHECK(got == expected);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      AlignOptions opts;
      opts.shuffle_seed = seed;
      CHECK(align(numbers, gold, opts).text() == got);
    }
  }
}

TEST_CASE("substitution examples") {
  const NumberMapping m = mapping_of("2 and 3 and 7");
  CHECK(substitute(T("N_1*x+N_2=N_3"), m) == "2*x+3=7");

  const NumberMapping neg = mapping_of("-15 then 70");
  const std::string s = substitute(T("x+M_1=N_2"), neg);
  CHECK(s == "x+(-15)=70");
  const SolutionSet sol = solve(parse_equations(s));
  REQUIRE(sol.status == SolutionStatus::kSolved);
  CHECK(*sol.assignments[0].value.exact == 85);

  CHECK_THROWS_AS(substitute(T("N_1+N_9=x"), m), UnknownSymbolError);
  CHECK(substitute(T("x=M_1^2"), neg) == "x=(-15)^2");
  CHECK(substitute(T("x=M_1*2"), neg) == "x=-15*2");
  CHECK(substitute(T("x=N_1*2;y=x"), mapping_of("3 1/3")) == "x=(10/3)*2; y=x");
  CHECK(substitute(T("x=F_1"), mapping_of("0.25")) == "x=0.25");
}

TEST_CASE("round trip on random linear instances") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> coef(11, 60), sol(-20, 20);
  for (int trial = 0; trial < 200; ++trial) {
    const int a = coef(rng), b = coef(rng), x = sol(rng);
    const int c = a * x + b;
    const std::string text = "take " + std::to_string(a) + " and " + std::to_string(b) +
                             " to get " + std::to_string(c);
    const std::string gold = std::to_string(a) + "*x+" + std::to_string(b) + "=" +
                             (c < 0 ? "(" + std::to_string(c) + ")" : std::to_string(c));
    const auto numbers = extract_numbers(text);
    const EquationTemplate tmpl = align(numbers, gold);
    const SolutionSet result = solve(parse_equations(substitute(tmpl, NumberMapping{numbers})));
    CHECK(check_answer(result, {Rational(x)}));
  }
}

TEST_CASE("source tokens") {
  const std::string text = "Tom has 5% of 1,200 Apples, and -3 more!";
  const auto tokens = source_tokens(text, extract_numbers(text));
  CHECK(tokens == std::vector<std::string>{"tom", "has", "F_1", "%", "of", "N_2", "apples", ",",
                                           "and", "M_3", "more", "!"});
}

TEST_CASE("template text round trip") {
  const EquationTemplate t = T("x+y=N_1;x-y=N_2");
  CHECK(t.text() == "x + y = N_1 ; x - y = N_2");
  CHECK(EquationTemplate::from_text(t.text()).tokens == t.tokens);
}

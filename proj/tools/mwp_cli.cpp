// Command-line front end: data generation, preprocessing, training, reward
// fine-tuning, evaluation and the equation solver.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mwp/corpus/dataset.hpp"
#include "mwp/corpus/evaluate.hpp"
#include "mwp/corpus/synth.hpp"
#include "mwp/corpus/vocabulary.hpp"
#include "mwp/equations/ast.hpp"
#include "mwp/equations/solver.hpp"
#include "mwp/model/checkpoint.hpp"
#include "mwp/training/trainer.hpp"

namespace {

using nlohmann::json;
using namespace mwp;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  }
  void operator()(const MetricsRecord& r) {
    const std::string line = to_json(r).dump();
    out_ << line << '\n' << std::flush;
    std::cerr << line << '\n';
  }

 private:
  std::ofstream out_;
};

void print_report(const char* label, const EvalReport& r) {
  std::cout << json{{"split", label},
                    {"count", r.count},
                    {"answer_accuracy_l2r", r.accuracy_l2r()},
                    {"answer_accuracy_r2l", r.accuracy_r2l()},
                    {"answer_accuracy_vote", r.accuracy_vote()}}
                   .dump()
            << '\n';
}

json checkpoint_metadata(const Vocabulary& source, const Vocabulary& target,
                         const TrainConfig& config) {
  return json{{"source_vocab", source}, {"target_vocab", target}, {"train_config", config}};
}

int cmd_gen(std::size_t n, std::uint64_t seed, const std::string& templates,
            double distractors, const std::string& out) {
  SynthOptions options;
  options.count = n;
  options.seed = seed;
  options.templates = split_csv(templates);
  options.distractor_rate = distractors;
  const auto problems = generate_problems(options);
  save_problems(out, problems);
  std::cerr << "wrote " << problems.size() << " problems to " << out << '\n';
  return 0;
}

int cmd_preprocess(const std::string& in, const std::string& out) {
  auto problems = load_problems(in);
  std::size_t unalignable = 0;
  for (auto& p : problems) {
    Preprocessed pre = preprocess(p);
    p.equation_template = pre.equation_template;
    if (!pre.equation_template) {
      ++unalignable;
      std::cerr << "unalignable " << p.id << ": " << pre.reason << '\n';
    }
  }
  save_problems(out, problems);
  std::cerr << problems.size() - unalignable << " of " << problems.size()
            << " problems aligned\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& config_path, std::optional<std::size_t> epochs,
              std::optional<double> lr, const std::string& out, std::string metrics,
              double dev_fraction) {
  TrainConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open " + config_path);
    config = json::parse(in).get<TrainConfig>();
  }
  if (epochs) config.epochs = *epochs;
  if (lr) config.lr = *lr;
  config.validate();

  const auto problems = load_problems(data);
  Split split{all_indices(problems.size()), {}};
  if (dev_fraction > 0.0) split = make_split(problems.size(), 1.0 - dev_fraction, config.seed);
  const Vocabulary target = Vocabulary::target();
  const Vocabulary source = build_source_vocabulary(problems, split.train);
  const auto train = encode_examples(problems, split.train, source, target);
  const auto dev = encode_examples(problems, split.test, source, target);

  DualDecoderTransformer model(config.model_config(source.size(), target.size()), config.seed);
  if (metrics.empty()) metrics = out + ".metrics.jsonl";
  JsonlWriter sink(metrics);
  train_mle(model, train, dev, target, config, std::ref(sink));
  save_checkpoint(out, model, checkpoint_metadata(source, target, config));
  std::cerr << "saved " << out << '\n';
  return 0;
}

int cmd_rl(const std::string& data, const std::string& ckpt, std::optional<double> lr,
           std::size_t beam, std::size_t epochs, const std::string& out, std::string metrics) {
  Checkpoint cp = load_checkpoint(ckpt);
  TrainConfig config = cp.metadata.at("train_config").get<TrainConfig>();
  if (lr) config.rl_lr = *lr;
  config.rl_beam = beam;
  config.rl_epochs = epochs;
  config.validate();
  const auto source = cp.metadata.at("source_vocab").get<Vocabulary>();
  const auto target = cp.metadata.at("target_vocab").get<Vocabulary>();
  const auto problems = load_problems(data);
  const auto train = encode_examples(problems, all_indices(problems.size()), source, target);

  if (metrics.empty()) metrics = out + ".metrics.jsonl";
  JsonlWriter sink(metrics);
  train_rl(cp.model, train, {}, target, config, std::ref(sink));
  save_checkpoint(out, cp.model, checkpoint_metadata(source, target, config));
  std::cerr << "saved " << out << '\n';
  return 0;
}

int cmd_eval(const std::string& data, const std::string& ckpt, std::size_t beam,
             std::size_t folds, std::uint64_t seed) {
  const Checkpoint cp = load_checkpoint(ckpt);
  const auto source = cp.metadata.at("source_vocab").get<Vocabulary>();
  const auto target = cp.metadata.at("target_vocab").get<Vocabulary>();
  const auto problems = load_problems(data);
  EvalOptions options;
  options.beam_size = beam;
  if (cp.metadata.contains("train_config")) {
    options.max_len = cp.metadata["train_config"].get<TrainConfig>().max_decode_len;
  }
  options.losses = false;

  EvalReport total;
  const auto parts = folds > 1 ? make_folds(problems.size(), folds, seed)
                               : std::vector<std::vector<std::size_t>>{all_indices(problems.size())};
  for (std::size_t f = 0; f < parts.size(); ++f) {
    const EvalReport r = evaluate(cp.model, encode_examples(problems, parts[f], source, target),
                                  target, options);
    print_report(("fold" + std::to_string(f + 1)).c_str(), r);
    total.count += r.count;
    total.correct_l2r += r.correct_l2r;
    total.correct_r2l += r.correct_r2l;
    total.correct_vote += r.correct_vote;
  }
  print_report("all", total);
  return 0;
}

int cmd_solve(const std::string& eq, const std::string& nums) {
  std::string text = eq;
  if (!nums.empty()) {
    NumberMapping mapping;
    for (const auto& item : split_csv(nums)) {
      auto value = parse_rational(item);
      if (!value) throw std::runtime_error("--nums entry '" + item + "' is not a number");
      ExtractedNumber n;
      n.surface = item;
      n.value = *value;
      n.kind = kind_of(*value);
      n.index = mapping.numbers.size() + 1;
      mapping.numbers.push_back(n);
    }
    EquationTemplate tmpl;
    for (const auto& t : tokenize_equation(eq)) tmpl.tokens.push_back(t.text);
    text = substitute(tmpl, mapping);
    std::cout << "equations: " << text << '\n';
  }
  const SolutionSet sol = solve(parse_equations(text));
  std::cout << "status: " << to_string(sol.status) << '\n';
  if (!sol.reason.empty()) std::cout << "reason: " << sol.reason << '\n';
  for (const auto& a : sol.assignments) {
    std::cout << a.variable << " = " << a.value.to_string() << '\n';
  }
  return sol.status == SolutionStatus::kSolved ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Math word problem equation generator"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic problem set");
  std::size_t gen_n = 100;
  std::uint64_t gen_seed = 1;
  std::string gen_templates, gen_out;
  double gen_distractors = 0.3;
  gen->add_option("--n", gen_n, "Number of problems")->required();
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--templates", gen_templates, "Comma-separated template families (default: all)");
  gen->add_option("--distractors", gen_distractors, "Probability of an irrelevant number");
  gen->add_option("--out", gen_out, "Output JSONL")->required();

  auto* pre = app.add_subcommand("preprocess", "Extract numbers and align templates");
  std::string pre_in, pre_out;
  pre->add_option("--in", pre_in, "Input JSONL")->required();
  pre->add_option("--out", pre_out, "Output JSONL")->required();

  auto* train = app.add_subcommand("train", "Maximum likelihood training");
  std::string train_data, train_config, train_out, train_metrics;
  std::optional<std::size_t> train_epochs;
  std::optional<double> train_lr;
  double train_dev = 0.0;
  train->add_option("--data", train_data, "Training JSONL")->required();
  train->add_option("--config", train_config, "JSON training config");
  train->add_option("--epochs", train_epochs, "Override the number of epochs");
  train->add_option("--lr", train_lr, "Override the learning rate");
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--metrics", train_metrics, "Metrics JSONL (default: <out>.metrics.jsonl)");
  train->add_option("--dev-fraction", train_dev, "Hold out this share of the data for metrics");

  auto* rl = app.add_subcommand("rl", "Reward fine-tuning from a checkpoint");
  std::string rl_data, rl_ckpt, rl_out, rl_metrics;
  std::optional<double> rl_lr;
  std::size_t rl_beam = 6, rl_epochs = 1;
  rl->add_option("--data", rl_data, "Training JSONL")->required();
  rl->add_option("--ckpt", rl_ckpt, "Starting checkpoint")->required();
  rl->add_option("--lr", rl_lr, "Learning rate");
  rl->add_option("--beam", rl_beam, "Beam size for sampling");
  rl->add_option("--epochs", rl_epochs, "Passes over the data");
  rl->add_option("--out", rl_out, "Checkpoint path")->required();
  rl->add_option("--metrics", rl_metrics, "Metrics JSONL (default: <out>.metrics.jsonl)");

  auto* ev = app.add_subcommand("eval", "Answer accuracy of a checkpoint");
  std::string ev_data, ev_ckpt;
  std::size_t ev_beam = 10, ev_folds = 5;
  std::uint64_t ev_seed = 1;
  ev->add_option("--data", ev_data, "Evaluation JSONL")->required();
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--beam", ev_beam, "Beam size");
  ev->add_option("--folds", ev_folds, "Report accuracy per fold (1: no folds)");
  ev->add_option("--seed", ev_seed, "Fold shuffling seed");

  auto* solve_cmd = app.add_subcommand("solve", "Solve equations or an instantiated template");
  std::string solve_eq, solve_nums;
  solve_cmd->add_option("--eq", solve_eq, "Equations, ';'-separated")->required();
  solve_cmd->add_option("--nums", solve_nums, "Comma-separated values for N_1, N_2, ...");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(gen_n, gen_seed, gen_templates, gen_distractors, gen_out);
    if (*pre) return cmd_preprocess(pre_in, pre_out);
    if (*train) {
      return cmd_train(train_data, train_config, train_epochs, train_lr, train_out, train_metrics,
                       train_dev);
    }
    if (*rl) return cmd_rl(rl_data, rl_ckpt, rl_lr, rl_beam, rl_epochs, rl_out, rl_metrics);
    if (*ev) return cmd_eval(ev_data, ev_ckpt, ev_beam, ev_folds, ev_seed);
    if (*solve_cmd) return cmd_solve(solve_eq, solve_nums);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "mmde/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmde/dataset.hpp"
#include "mmde/density.hpp"
#include "mmde/error.hpp"
#include "mmde/parallel.hpp"
#include "mmde/simgen.hpp"
#include "mmde/similarity.hpp"
#include "mmde/softloss.hpp"
#include "mmde/theory.hpp"

namespace mmde {

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(data_errc::io, "cannot open for writing: " + path);
  return out;
}

// "report.csv" -> "report.cdf_pos.csv"
std::string with_tag(const std::string& path, const std::string& tag) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos || path.find('/', dot) != std::string::npos) {
    return path + "." + tag;
  }
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

Combiner parse_combiner(const std::string& name) {
  if (name == "min") return Combiner::min;
  if (name == "mean") return Combiner::mean;
  throw UsageError("unknown combiner: " + name);
}

SimKernel parse_kernel(const std::string& name) {
  if (name == "cosine") return SimKernel::cosine;
  if (name == "neg_abs") return SimKernel::neg_abs;
  throw UsageError("unknown similarity kernel: " + name);
}

SweepParam parse_param(const std::string& name) {
  if (name == "k") return SweepParam::k;
  if (name == "eta") return SweepParam::eta;
  if (name == "m") return SweepParam::m;
  if (name == "t") return SweepParam::t_components;
  throw UsageError("unknown sweep parameter: " + name);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = std::min(text.find(',', start), text.size());
    const std::string field = text.substr(start, pos - start);
    if (!field.empty()) {
      try {
        grid.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw UsageError("bad grid value: " + field);
      }
    }
    start = pos + 1;
  }
  if (grid.empty()) throw UsageError("empty grid");
  return grid;
}

struct CommonFlags {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_option("--threads", flags.threads, "worker count (0 = all cores)")
      ->envname("MMDE_THREADS");
  cmd->add_option("--config", flags.config_file,
                  "key = value configuration file");
}

// Expands `--config FILE` into individual --key value tokens. Lines hold
// `key = value` pairs, `#` starts a comment. Explicit command-line flags win;
// unknown keys surface as parse errors downstream.
std::vector<std::string> apply_config_file(
    const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);

  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    return first == std::string::npos ? std::string()
                                      : s.substr(first, last - first + 1);
  };
  std::vector<std::string> expanded = args;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        given = true;
        break;
      }
    }
    if (given) continue;  // explicit flags override the file
    expanded.push_back(flag);
    if (!value.empty()) expanded.push_back(value);
  }
  return expanded;
}

std::vector<double> build_t_grid(double t_min, double t_max, double t_step) {
  if (!(t_min > 0.0) || !(t_step > 0.0) || t_max < t_min) {
    throw UsageError("invalid t grid bounds");
  }
  std::vector<double> grid;
  for (double t = t_min; t <= t_max + 1e-12; t += t_step) grid.push_back(t);
  return grid;
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepPoint>& points) {
  auto out = open_csv(path);
  out << "param_value,bound,tau_star,best_t,k0_marker\n";
  for (const auto& p : points) {
    out << format_g9(p.param_value) << ',';
    if (p.failed) {
      out << "nan,nan,nan,nan";
    } else {
      out << format_g9(p.result.bound) << ',' << format_g9(p.result.tau_star)
          << ',' << format_g9(p.result.best_t) << ','
          << format_g9(p.result.k0);
    }
    out << "\n";
  }
}

void write_empirical_csv(const std::string& path,
                         const std::vector<EmpiricalSweepPoint>& points) {
  auto out = open_csv(path);
  out << "param_value,bound,tau_star,best_t,k0_marker\n";
  for (const auto& p : points) {
    out << format_g9(p.param_value) << ',';
    if (p.failed) {
      out << "nan,nan,nan,nan";
    } else {
      out << format_g9(p.mean_error) << ',' << format_g9(p.mean_threshold)
          << ",nan," << format_g9(p.k0);
    }
    out << "\n";
  }
}

// --- subcommand drivers ------------------------------------------------------

struct ScoreArgs {
  std::string video, caption, output;
  std::optional<std::string> groups;
  std::string combiner = "min";
  std::string sim = "cosine";
  std::size_t k = 4;
  std::size_t stats_sample = 1000000;
  CommonFlags common;
};

int cmd_score(const ScoreArgs& a) {
  RunConfig cfg;
  cfg.k = a.k;
  cfg.combiner = parse_combiner(a.combiner);
  cfg.sim = parse_kernel(a.sim);
  cfg.stats_sample = a.stats_sample;
  cfg.seed = a.common.seed;
  cfg.threads = a.common.threads;
  validate_config(cfg);
  const PairedDataset ds = load_dataset(a.video, a.caption, a.groups);
  const ModalityStats stats = cfg.sim == SimKernel::neg_abs
                                  ? ModalityStats::identity()
                                  : estimate_modality_stats(ds, cfg);
  const KnnResult knn = knn_scores(ds, stats, cfg);
  const std::vector<double> p_hat = normalize_phat(knn.s_bar);
  save_scores(make_scores(knn.s_bar, p_hat), ds, a.output);
  std::cout << "score: " << ds.size() << " rows, k=" << cfg.k << " -> "
            << a.output << "\n";
  return 0;
}

struct SimToyArgs {
  std::string output_prefix;
  std::size_t components = 50;
  double eta = 0.5;
  std::size_t pairs = 1250;
  std::size_t d = 128;
  std::size_t d_v = 0;  // 0 = use --d
  std::size_t d_c = 0;
  CommonFlags common;
};

int cmd_simulate_toy(const SimToyArgs& a) {
  ToyGmmSpec spec;
  spec.components = a.components;
  spec.eta = a.eta;
  spec.pairs = a.pairs;
  spec.d_v = a.d_v > 0 ? a.d_v : a.d;
  spec.d_c = a.d_c > 0 ? a.d_c : a.d;
  spec.seed = a.common.seed;
  const PairedDataset ds = generate_multidim_toy(spec);
  const std::string video_path = a.output_prefix + ".video.mmde";
  const std::string caption_path = a.output_prefix + ".caption.mmde";
  const std::string groups_path = a.output_prefix + ".groups.txt";
  const std::string truth_path = a.output_prefix + ".truth.txt";
  save_embeddings_binary(ds.videos, video_path);
  save_embeddings_binary(ds.captions, caption_path);
  save_groups(ds.groups, groups_path);
  save_truth(ds.truth, truth_path);
  nlohmann::json manifest = {
      {"kind", "gaussian-mixture-toy"},
      {"components", spec.components},
      {"eta", spec.eta},
      {"pairs", spec.pairs},
      {"d_v", spec.d_v},
      {"d_c", spec.d_c},
      {"mean_range", {spec.mean_lo, spec.mean_hi}},
      {"cov_diag_range", {spec.cov_lo, spec.cov_hi}},
      {"seed", spec.seed},
      {"files",
       {{"video", video_path},
        {"caption", caption_path},
        {"groups", groups_path},
        {"truth", truth_path}}},
  };
  std::ofstream mf(a.output_prefix + ".manifest.json");
  if (!mf) {
    throw DataError(data_errc::io,
                    "cannot write " + a.output_prefix + ".manifest.json");
  }
  mf << manifest.dump(2) << "\n";
  std::size_t wrong = 0;
  for (const auto t : ds.truth) wrong += t == 0;
  std::cout << "simulate-toy: " << spec.pairs << " pairs, "
            << wrong << " wrongly associated -> " << a.output_prefix << ".*\n";
  return 0;
}

struct Sim1dArgs {
  std::string output_prefix;
  std::size_t components = 50;
  double eta = 0.5;
  std::size_t pairs = 1000;
  CommonFlags common;
};

int cmd_simulate_1d(const Sim1dArgs& a) {
  GmmSampler sampler;
  sampler.components = a.components;
  SplitMix64 rng = substream(a.common.seed, Stream::bound_model, 0,
                             a.components);
  const ScalarGmm gmm = sample_scalar_gmm(sampler, rng);
  const PairedDataset ds =
      generate_scalar_pairs(gmm, a.eta, a.pairs, a.common.seed);
  const std::string video_path = a.output_prefix + ".video.mmde";
  const std::string caption_path = a.output_prefix + ".caption.mmde";
  const std::string truth_path = a.output_prefix + ".truth.txt";
  save_embeddings_binary(ds.videos, video_path);
  save_embeddings_binary(ds.captions, caption_path);
  save_truth(ds.truth, truth_path);
  nlohmann::json manifest = {
      {"kind", "scalar-mixture-pairs"},
      {"components", a.components},
      {"eta", a.eta},
      {"pairs", a.pairs},
      {"seed", a.common.seed},
      {"mu_x", gmm.mu_x},
      {"sigma_x", gmm.sigma_x},
      {"mu_y", gmm.mu_y},
      {"sigma_y", gmm.sigma_y},
      {"files",
       {{"video", video_path},
        {"caption", caption_path},
        {"truth", truth_path}}},
  };
  std::ofstream mf(a.output_prefix + ".manifest.json");
  if (!mf) {
    throw DataError(data_errc::io,
                    "cannot write " + a.output_prefix + ".manifest.json");
  }
  mf << manifest.dump(2) << "\n";
  std::cout << "simulate-1d: " << a.pairs << " pairs from " << a.components
            << " components -> " << a.output_prefix << ".*\n";
  return 0;
}

struct BoundArgs {
  std::string output;
  std::size_t k = 8;
  double eta = 0.5;
  std::size_t m = 1000;
  std::size_t components = 50;
  std::size_t reps = 10;
  double t_min = 1.0, t_max = 100.0, t_step = 1.0;
  CommonFlags common;
};

BoundConfig make_bound_config(const BoundArgs& a) {
  BoundConfig cfg;
  cfg.k = a.k;
  cfg.eta = a.eta;
  cfg.m = a.m;
  cfg.repetitions = a.reps;
  cfg.seed = a.common.seed;
  cfg.threads = a.common.threads;
  cfg.t_grid = build_t_grid(a.t_min, a.t_max, a.t_step);
  validate_bound_config(cfg);
  return cfg;
}

int cmd_bound(const BoundArgs& a) {
  const BoundConfig cfg = make_bound_config(a);
  GmmSampler sampler;
  sampler.components = a.components;
  const BoundResult result = optimal_bound(cfg, sampler);
  std::vector<SweepPoint> points(1);
  points[0].param_value = static_cast<double>(a.k);
  points[0].result = result;
  write_sweep_csv(a.output, points);
  std::cout << "bound: " << format_g9(result.bound) << " at t="
            << format_g9(result.best_t) << " (tau*="
            << format_g9(result.tau_star) << ", k0=" << format_g9(result.k0)
            << (result.vacuous ? ", vacuous" : "") << ") -> " << a.output
            << "\n";
  return 0;
}

struct SweepArgs {
  std::string output;
  std::string mode = "theory";
  std::string param;
  std::string grid_text;
  bool hold_k0 = false;
  // theory base
  BoundArgs base;
  // empirical base
  std::size_t d = 128;
  std::size_t runs = 10;
  std::string combiner = "min";
  std::string sim = "cosine";
  std::size_t stats_sample = 1000000;
  std::size_t toy_pairs = 1250;
};

int cmd_sweep(SweepArgs& a) {
  const SweepParam param = parse_param(a.param);
  const std::vector<double> grid = parse_grid(a.grid_text);
  if (a.mode == "theory") {
    const BoundConfig cfg = make_bound_config(a.base);
    GmmSampler sampler;
    sampler.components = a.base.components;
    const auto points = sweep_bound(param, grid, cfg, sampler, a.hold_k0);
    write_sweep_csv(a.output, points);
    std::cout << "sweep(theory): " << points.size() << " points over "
              << a.param << " -> " << a.output << "\n";
    return 0;
  }
  if (a.mode != "empirical") throw UsageError("unknown mode: " + a.mode);
  ToyGmmSpec spec;
  spec.components = a.base.components;
  spec.eta = a.base.eta;
  spec.pairs = a.toy_pairs;
  spec.d_v = a.d;
  spec.d_c = a.d;
  spec.seed = a.base.common.seed;
  RunConfig run;
  run.k = a.base.k;
  run.combiner = parse_combiner(a.combiner);
  run.sim = parse_kernel(a.sim);
  run.stats_sample = a.stats_sample;
  run.seed = a.base.common.seed;
  run.threads = a.base.common.threads;
  validate_config(run);
  const auto points =
      empirical_error_sweep(param, grid, spec, run, a.runs, a.hold_k0);
  write_empirical_csv(a.output, points);
  std::cout << "sweep(empirical): " << points.size() << " points over "
            << a.param << " -> " << a.output << "\n";
  return 0;
}

struct TrainArgs {
  std::string video, caption, output_prefix;
  std::optional<std::string> truth, groups, scores;
  double delta = 0.2;
  double lr = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t joint_dim = 32;
  std::size_t negatives = 0;
  double same_group_fraction = 0.5;
  bool single_direction_weight = false;
  CommonFlags common;
};

int cmd_train_toy(const TrainArgs& a) {
  const PairedDataset ds = load_dataset(a.video, a.caption, a.groups, a.truth);
  std::vector<double> p_hat(ds.size(), 1.0);
  if (a.scores) {
    const NoiseScores scores = load_scores(*a.scores);
    if (scores.size() != ds.size()) {
      throw DataError(data_errc::row_mismatch,
                      "train-toy: score rows do not match the dataset");
    }
    for (std::size_t i = 0; i < ds.size(); ++i) p_hat[i] = scores.p_hat[i];
  }
  LossConfig cfg;
  cfg.delta = a.delta;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.joint_dim = a.joint_dim;
  cfg.negatives_per_positive = a.negatives;
  cfg.same_group_fraction = a.same_group_fraction;
  cfg.weight_both_directions = !a.single_direction_weight;
  cfg.seed = a.common.seed;
  auto [model, report] = train(ds, p_hat, cfg);

  {
    auto out = open_csv(a.output_prefix + ".train_log.csv");
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
      out << e << ',' << format_g9(report.epoch_loss[e]) << "\n";
    }
  }
  save_model(model, a.output_prefix + ".model");

  // retrieval over the correctly associated rows when labels are available
  std::vector<std::uint32_t> test;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.has_truth() || ds.truth[i] == 1) {
      test.push_back(static_cast<std::uint32_t>(i));
    }
  }
  const RetrievalMetrics metrics = retrieval_eval(model, ds, test);
  {
    auto out = open_csv(a.output_prefix + ".retrieval.csv");
    out << "metric,value\n";
    out << "R@1," << format_g9(metrics.r1) << "\n";
    out << "R@5," << format_g9(metrics.r5) << "\n";
    out << "R@10," << format_g9(metrics.r10) << "\n";
    out << "MR," << format_g9(metrics.median_rank) << "\n";
  }
  const double final_loss =
      report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back();
  std::cout << "train-toy: " << ds.size() << " pairs, final loss "
            << format_g9(final_loss) << ", R@5 " << format_g9(metrics.r5)
            << " -> " << a.output_prefix << ".*\n";
  return 0;
}

struct EvalArgs {
  std::string scores, truth, output;
};

int cmd_eval(const EvalArgs& a) {
  const NoiseScores scores = load_scores(a.scores);
  const std::vector<std::uint8_t> truth = load_truth(a.truth);
  if (truth.size() != scores.size()) {
    throw DataError(data_errc::row_mismatch,
                    "eval: " + std::to_string(truth.size()) + " labels for " +
                        std::to_string(scores.size()) + " scores");
  }
  std::vector<double> p_hat(scores.p_hat.begin(), scores.p_hat.end());
  const EvalReport report = evaluate(p_hat, truth);
  {
    auto out = open_csv(a.output);
    out << "threshold,precision,recall,f1\n";
    for (const auto& p : report.pr_curve) {
      out << format_g9(p.threshold) << ',' << format_g9(p.precision) << ','
          << format_g9(p.recall) << ',' << format_g9(p.f1) << "\n";
    }
  }
  auto write_cdf = [](const std::string& path,
                      const std::vector<std::pair<double, double>>& points) {
    auto out = open_csv(path);
    out << "p_hat,cdf\n";
    for (const auto& [value, frac] : points) {
      out << format_g9(value) << ',' << format_g9(frac) << "\n";
    }
  };
  write_cdf(with_tag(a.output, "cdf_pos"), report.cdf_pos);
  write_cdf(with_tag(a.output, "cdf_neg"), report.cdf_neg);
  std::cout << "eval: best F1 " << format_g9(report.best_f1) << " at threshold "
            << format_g9(report.best_f1_threshold) << " (error "
            << format_g9(report.error_at_best_f1) << ") -> " << a.output
            << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"multimodal pair-noise estimation toolkit"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd =
      app.add_subcommand("score", "estimate per-pair association scores");
  score_cmd->add_option("--video", score.video, "video embeddings")->required();
  score_cmd->add_option("--caption", score.caption, "caption embeddings")
      ->required();
  score_cmd->add_option("--groups", score.groups, "per-row group tokens");
  score_cmd->add_option("--output", score.output, "score CSV path")->required();
  score_cmd->add_option("--k", score.k, "neighbor count")
      ->check(CLI::PositiveNumber);
  score_cmd->add_option("--combiner", score.combiner, "min|mean");
  score_cmd->add_option("--sim", score.sim, "cosine|neg_abs");
  score_cmd->add_option("--stats-sample", score.stats_sample,
                        "pairs sampled for modality statistics");
  add_common(score_cmd, score.common);

  SimToyArgs toy;
  auto* toy_cmd = app.add_subcommand(
      "simulate-toy", "generate a labeled multidimensional mixture dataset");
  toy_cmd->add_option("--output-prefix", toy.output_prefix, "output prefix")
      ->required();
  toy_cmd->add_option("--t", toy.components, "mixture components")
      ->check(CLI::PositiveNumber);
  toy_cmd->add_option("--eta", toy.eta, "wrong-association probability");
  toy_cmd->add_option("--m", toy.pairs, "pair count")
      ->check(CLI::PositiveNumber);
  toy_cmd->add_option("--d", toy.d, "dimension of both modalities");
  toy_cmd->add_option("--dv", toy.d_v, "video dimension (overrides --d)");
  toy_cmd->add_option("--dc", toy.d_c, "caption dimension (overrides --d)");
  add_common(toy_cmd, toy.common);

  Sim1dArgs oned;
  auto* oned_cmd = app.add_subcommand(
      "simulate-1d", "generate labeled scalar mixture pairs");
  oned_cmd->add_option("--output-prefix", oned.output_prefix, "output prefix")
      ->required();
  oned_cmd->add_option("--t", oned.components, "mixture components")
      ->check(CLI::PositiveNumber);
  oned_cmd->add_option("--eta", oned.eta, "wrong-association probability");
  oned_cmd->add_option("--m", oned.pairs, "pair count")
      ->check(CLI::PositiveNumber);
  add_common(oned_cmd, oned.common);

  BoundArgs bound;
  auto* bound_cmd =
      app.add_subcommand("bound", "evaluate the tail bound for one setting");
  bound_cmd->add_option("--output", bound.output, "CSV path")->required();
  bound_cmd->add_option("--k", bound.k, "neighbor count")
      ->check(CLI::PositiveNumber);
  bound_cmd->add_option("--eta", bound.eta, "noise ratio");
  bound_cmd->add_option("--m", bound.m, "dataset size")
      ->check(CLI::PositiveNumber);
  bound_cmd->add_option("--t", bound.components, "mixture components")
      ->check(CLI::PositiveNumber);
  bound_cmd->add_option("--reps", bound.reps, "model/context repetitions")
      ->check(CLI::PositiveNumber);
  bound_cmd->add_option("--t-min", bound.t_min, "grid start");
  bound_cmd->add_option("--t-max", bound.t_max, "grid end");
  bound_cmd->add_option("--t-step", bound.t_step, "grid step");
  add_common(bound_cmd, bound.common);

  SweepArgs sweep;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "bound or empirical error across a grid");
  sweep_cmd->add_option("--output", sweep.output, "CSV path")->required();
  sweep_cmd->add_option("--mode", sweep.mode, "theory|empirical");
  sweep_cmd->add_option("--param", sweep.param, "k|eta|m|t")->required();
  sweep_cmd->add_option("--grid", sweep.grid_text, "comma-separated values")
      ->required();
  sweep_cmd->add_flag("--hold-k0", sweep.hold_k0,
                      "rescale m so (m/t)*(1-eta) stays fixed when sweeping t");
  sweep_cmd->add_option("--k", sweep.base.k, "neighbor count")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--eta", sweep.base.eta, "noise ratio");
  sweep_cmd->add_option("--m", sweep.base.m, "dataset size (theory)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--t", sweep.base.components, "mixture components")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--reps", sweep.base.reps, "repetitions (theory)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--t-min", sweep.base.t_min, "grid start");
  sweep_cmd->add_option("--t-max", sweep.base.t_max, "grid end");
  sweep_cmd->add_option("--t-step", sweep.base.t_step, "grid step");
  sweep_cmd->add_option("--d", sweep.d, "toy dimension (empirical)");
  sweep_cmd->add_option("--toy-m", sweep.toy_pairs, "toy pairs (empirical)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--runs", sweep.runs, "runs per point (empirical)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--combiner", sweep.combiner, "min|mean (empirical)");
  sweep_cmd->add_option("--sim", sweep.sim, "cosine|neg_abs (empirical)");
  sweep_cmd->add_option("--stats-sample", sweep.stats_sample,
                        "stats sample size (empirical)");
  add_common(sweep_cmd, sweep.base.common);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand(
      "train-toy", "train linear joint embeddings with weighted ranking loss");
  train_cmd->add_option("--video", train_args.video, "video embeddings")
      ->required();
  train_cmd->add_option("--caption", train_args.caption, "caption embeddings")
      ->required();
  train_cmd->add_option("--truth", train_args.truth, "labels file");
  train_cmd->add_option("--groups", train_args.groups, "group tokens");
  train_cmd->add_option("--scores", train_args.scores,
                        "score CSV (default: all weights 1)");
  train_cmd
      ->add_option("--output-prefix", train_args.output_prefix, "output prefix")
      ->required();
  train_cmd->add_option("--delta", train_args.delta, "ranking margin");
  train_cmd->add_option("--lr", train_args.lr, "learning rate");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--batch-size", train_args.batch_size, "batch size")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--joint-dim", train_args.joint_dim, "joint dimension")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--negatives", train_args.negatives,
                        "negatives per anchor (0 = whole batch)");
  train_cmd->add_option("--same-group-frac", train_args.same_group_fraction,
                        "fraction of same-group negatives");
  train_cmd->add_flag("--single-direction-weight",
                      train_args.single_direction_weight,
                      "weight only the video->caption hinge");
  add_common(train_cmd, train_args.common);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand(
      "eval", "precision/recall over thresholds against labels");
  eval_cmd->add_option("--scores", eval_args.scores, "score CSV")->required();
  eval_cmd->add_option("--truth", eval_args.truth, "labels file")->required();
  eval_cmd->add_option("--output", eval_args.output, "report CSV")->required();

  std::vector<std::string> expanded;
  try {
    expanded = apply_config_file(args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (score_cmd->parsed()) return cmd_score(score);
    if (toy_cmd->parsed()) return cmd_simulate_toy(toy);
    if (oned_cmd->parsed()) return cmd_simulate_1d(oned);
    if (bound_cmd->parsed()) return cmd_bound(bound);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep);
    if (train_cmd->parsed()) return cmd_train_toy(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    std::cerr << "usage error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace mmde

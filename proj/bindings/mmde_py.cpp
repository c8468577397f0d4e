#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>

#include "mmde/cli.hpp"
#include "mmde/dataset.hpp"
#include "mmde/density.hpp"
#include "mmde/error.hpp"
#include "mmde/simgen.hpp"
#include "mmde/similarity.hpp"
#include "mmde/softloss.hpp"
#include "mmde/theory.hpp"

namespace py = pybind11;
using namespace mmde;

namespace {

EmbeddingMatrix to_matrix(const py::array& arr, const char* what) {
  auto a = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a || a.ndim() != 2) {
    throw DataError(data_errc::bad_value,
                    std::string(what) + ": expected a 2-d float array");
  }
  EmbeddingMatrix m;
  m.rows = static_cast<std::size_t>(a.shape(0));
  m.dim = static_cast<std::size_t>(a.shape(1));
  m.data.resize(m.rows * m.dim);
  std::memcpy(m.data.data(), a.data(), m.data.size() * sizeof(float));
  validate_matrix(m, what);
  return m;
}

py::array_t<float> from_matrix(const EmbeddingMatrix& m) {
  py::array_t<float> out({m.rows, m.dim});
  std::memcpy(out.mutable_data(), m.data.data(), m.data.size() * sizeof(float));
  return out;
}

std::vector<double> to_vector(const py::array& arr, const char* what) {
  auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a || a.ndim() != 1) {
    throw DataError(data_errc::bad_value,
                    std::string(what) + ": expected a 1-d array");
  }
  return {a.data(), a.data() + a.shape(0)};
}

std::vector<std::uint8_t> to_labels(const py::array& arr) {
  const auto values = to_vector(arr, "truth");
  std::vector<std::uint8_t> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    labels[i] = values[i] != 0.0 ? 1 : 0;
  }
  return labels;
}

PairedDataset build_dataset(const py::array& videos, const py::array& captions,
                            const std::optional<std::vector<std::string>>& groups,
                            const std::optional<py::array>& truth) {
  return make_dataset(to_matrix(videos, "videos"), to_matrix(captions, "captions"),
                      groups.value_or(std::vector<std::string>{}),
                      truth ? to_labels(*truth) : std::vector<std::uint8_t>{});
}

RunConfig build_run_config(std::size_t k, const std::string& combiner,
                           const std::string& sim, std::size_t stats_sample,
                           std::uint64_t seed, unsigned threads) {
  RunConfig cfg;
  cfg.k = k;
  if (combiner == "min") {
    cfg.combiner = Combiner::min;
  } else if (combiner == "mean") {
    cfg.combiner = Combiner::mean;
  } else {
    throw UsageError("unknown combiner: " + combiner);
  }
  if (sim == "cosine") {
    cfg.sim = SimKernel::cosine;
  } else if (sim == "neg_abs") {
    cfg.sim = SimKernel::neg_abs;
  } else {
    throw UsageError("unknown similarity kernel: " + sim);
  }
  cfg.stats_sample = stats_sample;
  cfg.seed = seed;
  cfg.threads = threads;
  validate_config(cfg);
  return cfg;
}

py::dict report_to_dict(const EvalReport& report) {
  py::list pr;
  for (const auto& p : report.pr_curve) {
    pr.append(py::make_tuple(p.threshold, p.precision, p.recall, p.f1));
  }
  py::dict out;
  out["pr_curve"] = pr;
  out["cdf_pos"] = report.cdf_pos;
  out["cdf_neg"] = report.cdf_neg;
  out["best_f1_threshold"] = report.best_f1_threshold;
  out["best_f1"] = report.best_f1;
  out["error_at_best_f1"] = report.error_at_best_f1;
  return out;
}

py::dict bound_to_dict(const BoundResult& r) {
  py::list per_t;
  for (const auto& p : r.per_t) {
    per_t.append(py::make_tuple(p.t, p.bound0, p.bound1));
  }
  py::dict out;
  out["tau_star"] = r.tau_star;
  out["bound"] = r.bound;
  out["best_t"] = r.best_t;
  out["vacuous"] = r.vacuous;
  out["k0"] = r.k0;
  out["per_t"] = per_t;
  return out;
}

ScalarGmm build_gmm(const py::array& mu_x, const py::array& sigma_x,
                    const py::array& mu_y, const py::array& sigma_y) {
  ScalarGmm gmm;
  gmm.mu_x = to_vector(mu_x, "mu_x");
  gmm.sigma_x = to_vector(sigma_x, "sigma_x");
  gmm.mu_y = to_vector(mu_y, "mu_y");
  gmm.sigma_y = to_vector(sigma_y, "sigma_y");
  validate_gmm(gmm);
  return gmm;
}

}  // namespace

PYBIND11_MODULE(_mmde, m) {
  m.doc() = "multimodal pair-noise estimation core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("cosine_sim",
        [](const py::array& x, const py::array& y) {
          const auto a = to_vector(x, "x");
          const auto b = to_vector(y, "y");
          std::vector<float> af(a.begin(), a.end()), bf(b.begin(), b.end());
          return cosine_sim(af, bf);
        },
        py::arg("x"), py::arg("y"));
  m.def("neg_abs_sim", &neg_abs_sim, py::arg("x"), py::arg("y"));

  m.def(
      "simulate_toy",
      [](std::size_t components, double eta, std::size_t pairs, std::size_t d_v,
         std::size_t d_c, std::uint64_t seed) {
        ToyGmmSpec spec;
        spec.components = components;
        spec.eta = eta;
        spec.pairs = pairs;
        spec.d_v = d_v;
        spec.d_c = d_c;
        spec.seed = seed;
        const PairedDataset ds = generate_multidim_toy(spec);
        py::dict out;
        out["videos"] = from_matrix(ds.videos);
        out["captions"] = from_matrix(ds.captions);
        out["groups"] = ds.groups;
        py::array_t<std::uint8_t> truth(ds.truth.size());
        std::memcpy(truth.mutable_data(), ds.truth.data(), ds.truth.size());
        out["truth"] = truth;
        return out;
      },
      py::arg("components") = 50, py::arg("eta") = 0.5, py::arg("pairs") = 1250,
      py::arg("d_v") = 128, py::arg("d_c") = 128, py::arg("seed") = 1);

  m.def(
      "generate_scalar_pairs",
      [](const py::array& mu_x, const py::array& sigma_x, const py::array& mu_y,
         const py::array& sigma_y, double eta, std::size_t pairs,
         std::uint64_t seed) {
        const ScalarGmm gmm = build_gmm(mu_x, sigma_x, mu_y, sigma_y);
        const PairedDataset ds = generate_scalar_pairs(gmm, eta, pairs, seed);
        py::dict out;
        out["x"] = from_matrix(ds.videos);
        out["y"] = from_matrix(ds.captions);
        py::array_t<std::uint8_t> truth(ds.truth.size());
        std::memcpy(truth.mutable_data(), ds.truth.data(), ds.truth.size());
        out["truth"] = truth;
        return out;
      },
      py::arg("mu_x"), py::arg("sigma_x"), py::arg("mu_y"), py::arg("sigma_y"),
      py::arg("eta"), py::arg("pairs"), py::arg("seed") = 1);

  m.def(
      "score_pipeline",
      [](const py::array& videos, const py::array& captions,
         const std::optional<std::vector<std::string>>& groups, std::size_t k,
         const std::string& combiner, const std::string& sim,
         std::size_t stats_sample, std::uint64_t seed, unsigned threads) {
        const PairedDataset ds =
            build_dataset(videos, captions, groups, std::nullopt);
        const RunConfig cfg =
            build_run_config(k, combiner, sim, stats_sample, seed, threads);
        const ModalityStats stats = cfg.sim == SimKernel::neg_abs
                                        ? ModalityStats::identity()
                                        : estimate_modality_stats(ds, cfg);
        const KnnResult knn = knn_scores(ds, stats, cfg);
        const std::vector<double> p_hat = normalize_phat(knn.s_bar);
        py::dict out;
        out["s_bar"] = py::array_t<double>(knn.s_bar.size(), knn.s_bar.data());
        out["p_hat"] = py::array_t<double>(p_hat.size(), p_hat.data());
        py::array_t<std::uint32_t> neighbors(
            {knn.rows, knn.k});
        std::memcpy(neighbors.mutable_data(), knn.neighbors.data(),
                    knn.neighbors.size() * sizeof(std::uint32_t));
        out["neighbors"] = neighbors;
        return out;
      },
      py::arg("videos"), py::arg("captions"), py::arg("groups") = std::nullopt,
      py::arg("k") = 4, py::arg("combiner") = "min", py::arg("sim") = "cosine",
      py::arg("stats_sample") = 1000000, py::arg("seed") = 1,
      py::arg("threads") = 0);

  m.def(
      "normalize_phat",
      [](const py::array& s_bar) {
        const auto values = to_vector(s_bar, "s_bar");
        const auto p_hat = normalize_phat(values);
        return py::array_t<double>(p_hat.size(), p_hat.data());
      },
      py::arg("s_bar"));

  m.def(
      "hard_threshold",
      [](const py::array& p_hat, double theta) {
        const auto values = to_vector(p_hat, "p_hat");
        const auto keep = hard_threshold(values, theta);
        py::array_t<bool> out(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) {
          out.mutable_at(i) = keep[i] != 0;
        }
        return out;
      },
      py::arg("p_hat"), py::arg("theta"));

  m.def(
      "evaluate",
      [](const py::array& p_hat, const py::array& truth) {
        const auto values = to_vector(p_hat, "p_hat");
        const auto labels = to_labels(truth);
        return report_to_dict(evaluate(values, labels));
      },
      py::arg("p_hat"), py::arg("truth"));

  m.def(
      "soft_rank_loss",
      [](const py::array& sims, const py::array& p_hat, double delta,
         bool weight_both_directions) {
        auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::
            ensure(sims);
        if (!a || a.ndim() != 2 || a.shape(0) != a.shape(1)) {
          throw DataError(data_errc::bad_value,
                          "soft_rank_loss: expected a square 2-d array");
        }
        MatD grid(a.shape(0), a.shape(1));
        std::memcpy(grid.data.data(), a.data(),
                    grid.data.size() * sizeof(double));
        const auto weights = to_vector(p_hat, "p_hat");
        return soft_rank_loss(grid, weights, delta, nullptr,
                              weight_both_directions);
      },
      py::arg("sims"), py::arg("p_hat"), py::arg("delta") = 0.2,
      py::arg("weight_both_directions") = true);

  m.def(
      "train_toy",
      [](const py::array& videos, const py::array& captions,
         const py::array& p_hat,
         const std::optional<std::vector<std::string>>& groups, double delta,
         double learning_rate, std::size_t epochs, std::size_t batch_size,
         std::size_t joint_dim, std::size_t negatives_per_positive,
         double same_group_fraction, std::uint64_t seed) {
        const PairedDataset ds =
            build_dataset(videos, captions, groups, std::nullopt);
        LossConfig cfg;
        cfg.delta = delta;
        cfg.learning_rate = learning_rate;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.joint_dim = joint_dim;
        cfg.negatives_per_positive = negatives_per_positive;
        cfg.same_group_fraction = same_group_fraction;
        cfg.seed = seed;
        auto [model, report] = train(ds, to_vector(p_hat, "p_hat"), cfg);
        py::dict out;
        out["epoch_loss"] = report.epoch_loss;
        py::dict tensors;
        auto tensor = [](const std::vector<double>& data, std::size_t rows,
                         std::size_t cols) {
          py::array_t<double> arr({rows, cols});
          std::memcpy(arr.mutable_data(), data.data(),
                      data.size() * sizeof(double));
          return arr;
        };
        tensors["w_v"] = tensor(model.w_v.data, model.d, model.d_v);
        tensors["b_v"] = tensor(model.b_v, 1, model.d);
        tensors["w_c"] = tensor(model.w_c.data, model.d, model.d_c);
        tensors["b_c"] = tensor(model.b_c, 1, model.d);
        out["model"] = tensors;
        return out;
      },
      py::arg("videos"), py::arg("captions"), py::arg("p_hat"),
      py::arg("groups") = std::nullopt, py::arg("delta") = 0.2,
      py::arg("learning_rate") = 1e-3, py::arg("epochs") = 10,
      py::arg("batch_size") = 128, py::arg("joint_dim") = 32,
      py::arg("negatives_per_positive") = 0,
      py::arg("same_group_fraction") = 0.5, py::arg("seed") = 1);

  m.def(
      "retrieval_eval",
      [](const py::dict& tensors, const py::array& videos,
         const py::array& captions, const std::vector<std::uint32_t>& indices) {
        const PairedDataset ds =
            build_dataset(videos, captions, std::nullopt, std::nullopt);
        EmbeddingModel model;
        auto read = [&](const char* name) {
          auto a = py::array_t<double, py::array::c_style |
                                           py::array::forcecast>::
              ensure(tensors[name].cast<py::array>());
          MatD out(a.shape(0), a.ndim() == 2 ? a.shape(1) : 1);
          std::memcpy(out.data.data(), a.data(),
                      out.data.size() * sizeof(double));
          return out;
        };
        model.w_v = read("w_v");
        model.w_c = read("w_c");
        model.d = model.w_v.rows;
        model.d_v = model.w_v.cols;
        model.d_c = model.w_c.cols;
        model.b_v = read("b_v").data;
        model.b_c = read("b_c").data;
        const RetrievalMetrics metrics = retrieval_eval(model, ds, indices);
        py::dict out;
        out["R@1"] = metrics.r1;
        out["R@5"] = metrics.r5;
        out["R@10"] = metrics.r10;
        out["MR"] = metrics.median_rank;
        return out;
      },
      py::arg("model"), py::arg("videos"), py::arg("captions"),
      py::arg("indices"));

  m.def("folded_mgf", &folded_mgf, py::arg("t"), py::arg("mu"),
        py::arg("sigma"));
  m.def("log_folded_mgf", &log_folded_mgf, py::arg("t"), py::arg("mu"),
        py::arg("sigma"));

  m.def(
      "optimal_bound",
      [](std::size_t k, double eta, std::size_t m, std::size_t components,
         std::size_t repetitions, std::uint64_t seed) {
        BoundConfig cfg;
        cfg.k = k;
        cfg.eta = eta;
        cfg.m = m;
        cfg.repetitions = repetitions;
        cfg.seed = seed;
        GmmSampler sampler;
        sampler.components = components;
        return bound_to_dict(optimal_bound(cfg, sampler));
      },
      py::arg("k") = 8, py::arg("eta") = 0.5, py::arg("m") = 1000,
      py::arg("components") = 50, py::arg("repetitions") = 10,
      py::arg("seed") = 1);

  m.def(
      "sweep_bound",
      [](const std::string& param, const std::vector<double>& grid,
         std::size_t k, double eta, std::size_t m, std::size_t components,
         std::size_t repetitions, std::uint64_t seed, bool hold_k0) {
        BoundConfig cfg;
        cfg.k = k;
        cfg.eta = eta;
        cfg.m = m;
        cfg.repetitions = repetitions;
        cfg.seed = seed;
        GmmSampler sampler;
        sampler.components = components;
        SweepParam p;
        if (param == "k") {
          p = SweepParam::k;
        } else if (param == "eta") {
          p = SweepParam::eta;
        } else if (param == "m") {
          p = SweepParam::m;
        } else if (param == "t") {
          p = SweepParam::t_components;
        } else {
          throw UsageError("unknown sweep parameter: " + param);
        }
        const auto points = sweep_bound(p, grid, cfg, sampler, hold_k0);
        py::list out;
        for (const auto& point : points) {
          py::dict d;
          d["param_value"] = point.param_value;
          d["failed"] = point.failed;
          if (point.failed) {
            d["error"] = point.error;
          } else {
            d["bound"] = point.result.bound;
            d["tau_star"] = point.result.tau_star;
            d["best_t"] = point.result.best_t;
            d["k0"] = point.result.k0;
          }
          out.append(d);
        }
        return out;
      },
      py::arg("param"), py::arg("grid"), py::arg("k") = 8, py::arg("eta") = 0.5,
      py::arg("m") = 1000, py::arg("components") = 50,
      py::arg("repetitions") = 10, py::arg("seed") = 1,
      py::arg("hold_k0") = false);

  m.def("run_cli", &run_command, py::arg("args"),
        "run a CLI invocation in-process; returns the exit code");
}

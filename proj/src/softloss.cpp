#include "mmde/softloss.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mmde/error.hpp"
#include "mmde/rng.hpp"

namespace mmde {

namespace {

void linear_map(const MatD& w, std::span<const double> b,
                std::span<const float> in, double* out) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    double acc = b[r];
    const double* wrow = w.row(r);
    for (std::size_t c = 0; c < w.cols; ++c) {
      acc += wrow[c] * static_cast<double>(in[c]);
    }
    out[r] = acc;
  }
}

double norm(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<std::vector<std::uint32_t>> draw_negatives(
    const PairedDataset& dataset, std::span<const std::uint32_t> batch,
    const LossConfig& cfg, SplitMix64& rng) {
  const std::size_t b = batch.size();
  std::vector<std::vector<std::uint32_t>> negatives(b);
  const std::size_t want = cfg.negatives_per_positive;
  for (std::size_t i = 0; i < b; ++i) {
    if (want == 0 || want >= b - 1) {
      negatives[i].reserve(b - 1);
      for (std::size_t j = 0; j < b; ++j) {
        if (j != i) negatives[i].push_back(static_cast<std::uint32_t>(j));
      }
      continue;
    }
    std::vector<std::uint32_t> same, other;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      if (dataset.has_groups() &&
          dataset.group_ids[batch[j]] == dataset.group_ids[batch[i]]) {
        same.push_back(static_cast<std::uint32_t>(j));
      } else {
        other.push_back(static_cast<std::uint32_t>(j));
      }
    }
    const double frac = dataset.has_groups() ? cfg.same_group_fraction : 0.0;
    std::size_t n_same = std::min<std::size_t>(
        same.size(),
        static_cast<std::size_t>(std::llround(frac * static_cast<double>(want))));
    std::size_t n_other = std::min(other.size(), want - n_same);
    // top up from whichever side still has candidates
    n_same = std::min(same.size(), n_same + (want - n_same - n_other));
    auto take = [&rng](std::vector<std::uint32_t>& pool, std::size_t n,
                       std::vector<std::uint32_t>& out) {
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t pick = t + rng.next_below(pool.size() - t);
        std::swap(pool[t], pool[pick]);
        out.push_back(pool[t]);
      }
    };
    take(same, n_same, negatives[i]);
    take(other, n_other, negatives[i]);
    std::sort(negatives[i].begin(), negatives[i].end());
  }
  return negatives;
}

void write_tensor(const std::string& path, const double* data,
                  std::size_t rows, std::size_t cols) {
  EmbeddingMatrix m;
  m.rows = rows;
  m.dim = cols;
  m.data.resize(rows * cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = static_cast<float>(data[i]);
  }
  save_embeddings_binary(m, path);
}

}  // namespace

EmbeddingModel init_model(std::size_t d, std::size_t d_v, std::size_t d_c,
                          std::uint64_t seed) {
  if (d == 0 || d_v == 0 || d_c == 0) {
    throw UsageError("init_model: dimensions must be positive");
  }
  EmbeddingModel model;
  model.d = d;
  model.d_v = d_v;
  model.d_c = d_c;
  model.w_v = MatD(d, d_v);
  model.w_c = MatD(d, d_c);
  model.b_v.assign(d, 0.0);
  model.b_c.assign(d, 0.0);
  SplitMix64 rng = substream(seed, Stream::train_init);
  const double scale_v = 1.0 / std::sqrt(static_cast<double>(d_v));
  for (auto& w : model.w_v.data) w = (2.0 * rng.next_double() - 1.0) * scale_v;
  const double scale_c = 1.0 / std::sqrt(static_cast<double>(d_c));
  for (auto& w : model.w_c.data) w = (2.0 * rng.next_double() - 1.0) * scale_c;
  return model;
}

std::pair<MatD, MatD> embed(const EmbeddingModel& model,
                            const PairedDataset& dataset) {
  if (model.d_v != dataset.videos.dim || model.d_c != dataset.captions.dim) {
    throw DataError(data_errc::row_mismatch,
                    "embed: model expects " + std::to_string(model.d_v) + "/" +
                        std::to_string(model.d_c) + "-d rows, dataset has " +
                        std::to_string(dataset.videos.dim) + "/" +
                        std::to_string(dataset.captions.dim));
  }
  const std::size_t m = dataset.size();
  MatD ev(m, model.d), ec(m, model.d);
  for (std::size_t i = 0; i < m; ++i) {
    linear_map(model.w_v, model.b_v, dataset.videos.row(i), ev.row(i));
    linear_map(model.w_c, model.b_c, dataset.captions.row(i), ec.row(i));
  }
  return {std::move(ev), std::move(ec)};
}

MatD cosine_grid(const MatD& video_emb, const MatD& caption_emb) {
  if (video_emb.cols != caption_emb.cols) {
    throw DataError(data_errc::row_mismatch, "cosine_grid: dimension mismatch");
  }
  const std::size_t d = video_emb.cols;
  std::vector<double> nv(video_emb.rows), nc(caption_emb.rows);
  for (std::size_t i = 0; i < video_emb.rows; ++i) {
    nv[i] = norm(video_emb.row(i), d);
    if (nv[i] == 0.0) {
      throw DataError(data_errc::zero_norm,
                      "cosine_grid: zero-norm video embedding");
    }
  }
  for (std::size_t j = 0; j < caption_emb.rows; ++j) {
    nc[j] = norm(caption_emb.row(j), d);
    if (nc[j] == 0.0) {
      throw DataError(data_errc::zero_norm,
                      "cosine_grid: zero-norm caption embedding");
    }
  }
  MatD sims(video_emb.rows, caption_emb.rows);
  for (std::size_t i = 0; i < video_emb.rows; ++i) {
    for (std::size_t j = 0; j < caption_emb.rows; ++j) {
      sims.at(i, j) = dot(video_emb.row(i), caption_emb.row(j), d) /
                      (nv[i] * nc[j]);
    }
  }
  return sims;
}

double soft_rank_loss(const MatD& sims, std::span<const double> p_hat,
                      double delta,
                      const std::vector<std::vector<std::uint32_t>>* negatives,
                      bool weight_both_directions) {
  if (sims.rows != sims.cols || sims.rows != p_hat.size()) {
    throw DataError(data_errc::row_mismatch,
                    "soft_rank_loss: need a square grid matching p_hat");
  }
  const std::size_t b = sims.rows;
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double w_video = p_hat[i];
    const double w_caption = weight_both_directions ? p_hat[i] : 1.0;
    const double s_ii = sims.at(i, i);
    auto accumulate = [&](std::size_t j) {
      const double video_hinge = sims.at(i, j) - s_ii + delta;
      if (video_hinge > 0.0) loss += w_video * video_hinge;
      const double caption_hinge = sims.at(j, i) - s_ii + delta;
      if (caption_hinge > 0.0) loss += w_caption * caption_hinge;
    };
    if (negatives) {
      for (const auto j : (*negatives)[i]) accumulate(j);
    } else {
      for (std::size_t j = 0; j < b; ++j) {
        if (j != i) accumulate(j);
      }
    }
  }
  return loss;
}

double soft_rank_grad(const PairedDataset& dataset,
                      std::span<const std::uint32_t> batch,
                      const EmbeddingModel& model,
                      std::span<const double> p_hat_batch, double delta,
                      const std::vector<std::vector<std::uint32_t>>* negatives,
                      bool weight_both_directions, ParamGrads& grads) {
  const std::size_t b = batch.size();
  if (b == 0) {
    throw DataError(data_errc::bad_value, "soft_rank_grad: empty batch");
  }
  const std::size_t d = model.d;

  MatD ev(b, d), ec(b, d);
  for (std::size_t i = 0; i < b; ++i) {
    linear_map(model.w_v, model.b_v, dataset.videos.row(batch[i]), ev.row(i));
    linear_map(model.w_c, model.b_c, dataset.captions.row(batch[i]), ec.row(i));
  }
  MatD sims = cosine_grid(ev, ec);
  std::vector<double> nv(b), nc(b);
  for (std::size_t i = 0; i < b; ++i) {
    nv[i] = norm(ev.row(i), d);
    nc[i] = norm(ec.row(i), d);
  }

  // dL/ds accumulated over active hinges
  MatD g(b, b);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double w_video = p_hat_batch[i];
    const double w_caption = weight_both_directions ? p_hat_batch[i] : 1.0;
    const double s_ii = sims.at(i, i);
    auto accumulate = [&](std::size_t j) {
      const double video_hinge = sims.at(i, j) - s_ii + delta;
      if (video_hinge > 0.0) {
        loss += w_video * video_hinge;
        g.at(i, j) += w_video;
        g.at(i, i) -= w_video;
      }
      const double caption_hinge = sims.at(j, i) - s_ii + delta;
      if (caption_hinge > 0.0) {
        loss += w_caption * caption_hinge;
        g.at(j, i) += w_caption;
        g.at(i, i) -= w_caption;
      }
    };
    if (negatives) {
      for (const auto j : (*negatives)[i]) accumulate(j);
    } else {
      for (std::size_t j = 0; j < b; ++j) {
        if (j != i) accumulate(j);
      }
    }
  }

  // ds_ij/de_i = g_j/(|e||g|) - s_ij * e_i/|e|^2, and symmetrically for g_j
  MatD de(b, d), dc(b, d);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double gij = g.at(i, j);
      if (gij == 0.0) continue;
      const double s = sims.at(i, j);
      const double inv_ng = 1.0 / (nv[i] * nc[j]);
      const double* e = ev.row(i);
      const double* c = ec.row(j);
      double* dei = de.row(i);
      double* dcj = dc.row(j);
      const double ev_scale = s / (nv[i] * nv[i]);
      const double ec_scale = s / (nc[j] * nc[j]);
      for (std::size_t r = 0; r < d; ++r) {
        dei[r] += gij * (c[r] * inv_ng - ev_scale * e[r]);
        dcj[r] += gij * (e[r] * inv_ng - ec_scale * c[r]);
      }
    }
  }

  grads.w_v = MatD(d, model.d_v);
  grads.w_c = MatD(d, model.d_c);
  grads.b_v.assign(d, 0.0);
  grads.b_c.assign(d, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto vrow = dataset.videos.row(batch[i]);
    const auto crow = dataset.captions.row(batch[i]);
    const double* dei = de.row(i);
    const double* dci = dc.row(i);
    for (std::size_t r = 0; r < d; ++r) {
      double* wv = grads.w_v.row(r);
      for (std::size_t cidx = 0; cidx < model.d_v; ++cidx) {
        wv[cidx] += dei[r] * static_cast<double>(vrow[cidx]);
      }
      grads.b_v[r] += dei[r];
      double* wc = grads.w_c.row(r);
      for (std::size_t cidx = 0; cidx < model.d_c; ++cidx) {
        wc[cidx] += dci[r] * static_cast<double>(crow[cidx]);
      }
      grads.b_c[r] += dci[r];
    }
  }
  return loss;
}

std::pair<EmbeddingModel, TrainReport> train(const PairedDataset& dataset,
                                             std::span<const double> p_hat,
                                             const LossConfig& cfg) {
  const std::size_t m = dataset.size();
  if (p_hat.size() != m) {
    throw DataError(data_errc::row_mismatch,
                    "train: p_hat length does not match the dataset");
  }
  if (cfg.batch_size < 2) throw UsageError("train: batch_size must be >= 2");
  if (!(cfg.delta > 0.0)) throw UsageError("train: delta must be positive");
  if (!(cfg.learning_rate > 0.0)) {
    throw UsageError("train: learning_rate must be positive");
  }

  EmbeddingModel model =
      init_model(cfg.joint_dim, dataset.videos.dim, dataset.captions.dim,
                 cfg.seed);
  TrainReport report;
  std::vector<std::uint32_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<std::uint32_t>(i);

  ParamGrads grads;
  std::vector<double> p_batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng = substream(cfg.seed, Stream::train_shuffle, epoch);
    for (std::size_t i = m; i > 1; --i) {
      const std::size_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < m; start += cfg.batch_size) {
      const std::size_t end = std::min(m, start + cfg.batch_size);
      if (end - start < 2) continue;  // a single pair has no negatives
      std::span<const std::uint32_t> batch(order.data() + start, end - start);
      SplitMix64 neg_rng =
          substream(cfg.seed, Stream::train_negatives, epoch, batches);
      const auto negatives = draw_negatives(dataset, batch, cfg, neg_rng);
      p_batch.resize(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        p_batch[i] = p_hat[batch[i]];
      }
      const double loss =
          soft_rank_grad(dataset, batch, model, p_batch, cfg.delta, &negatives,
                         cfg.weight_both_directions, grads);
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      const double lr = cfg.learning_rate;
      for (std::size_t i = 0; i < model.w_v.data.size(); ++i) {
        model.w_v.data[i] -= lr * grads.w_v.data[i];
      }
      for (std::size_t i = 0; i < model.w_c.data.size(); ++i) {
        model.w_c.data[i] -= lr * grads.w_c.data[i];
      }
      for (std::size_t i = 0; i < model.d; ++i) {
        model.b_v[i] -= lr * grads.b_v[i];
        model.b_c[i] -= lr * grads.b_c[i];
      }
      epoch_loss += loss;
      ++batches;
    }
    report.epoch_loss.push_back(batches > 0 ? epoch_loss / batches : 0.0);
  }
  return {std::move(model), std::move(report)};
}

RetrievalMetrics retrieval_eval(const EmbeddingModel& model,
                                const PairedDataset& dataset,
                                std::span<const std::uint32_t> test_indices) {
  const std::size_t n = test_indices.size();
  if (n < 10) {
    throw DataError(data_errc::bad_value,
                    "retrieval_eval: need at least 10 test pairs");
  }
  const std::size_t d = model.d;
  MatD ev(n, d), ec(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    linear_map(model.w_v, model.b_v, dataset.videos.row(test_indices[i]),
               ev.row(i));
    linear_map(model.w_c, model.b_c, dataset.captions.row(test_indices[i]),
               ec.row(i));
  }
  const MatD sims = cosine_grid(ev, ec);
  std::vector<double> ranks(n);
  std::size_t hits1 = 0, hits5 = 0, hits10 = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double true_sim = sims.at(c, c);
    std::size_t rank = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == c) continue;
      if (sims.at(v, c) > true_sim ||
          (sims.at(v, c) == true_sim && v < c)) {
        ++rank;
      }
    }
    ranks[c] = static_cast<double>(rank);
    hits1 += rank <= 1;
    hits5 += rank <= 5;
    hits10 += rank <= 10;
  }
  std::sort(ranks.begin(), ranks.end());
  RetrievalMetrics metrics;
  metrics.r1 = static_cast<double>(hits1) / static_cast<double>(n);
  metrics.r5 = static_cast<double>(hits5) / static_cast<double>(n);
  metrics.r10 = static_cast<double>(hits10) / static_cast<double>(n);
  metrics.median_rank = n % 2 == 1
                            ? ranks[n / 2]
                            : 0.5 * (ranks[n / 2 - 1] + ranks[n / 2]);
  return metrics;
}

void save_model(const EmbeddingModel& model, const std::string& prefix) {
  write_tensor(prefix + ".w_v.mmde", model.w_v.data.data(), model.d, model.d_v);
  write_tensor(prefix + ".w_c.mmde", model.w_c.data.data(), model.d, model.d_c);
  write_tensor(prefix + ".b_v.mmde", model.b_v.data(), 1, model.d);
  write_tensor(prefix + ".b_c.mmde", model.b_c.data(), 1, model.d);
  nlohmann::json manifest = {
      {"joint_dim", model.d},
      {"d_v", model.d_v},
      {"d_c", model.d_c},
      {"tensors",
       {{"w_v", prefix + ".w_v.mmde"},
        {"w_c", prefix + ".w_c.mmde"},
        {"b_v", prefix + ".b_v.mmde"},
        {"b_c", prefix + ".b_c.mmde"}}},
  };
  std::ofstream out(prefix + ".manifest.json");
  if (!out) {
    throw DataError(data_errc::io,
                    "save_model: cannot write " + prefix + ".manifest.json");
  }
  out << manifest.dump(2) << "\n";
}

EmbeddingModel load_model(const std::string& prefix) {
  std::ifstream in(prefix + ".manifest.json");
  if (!in) {
    throw DataError(data_errc::io,
                    "load_model: cannot open " + prefix + ".manifest.json");
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(data_errc::schema,
                    std::string("load_model: bad manifest: ") + e.what());
  }
  EmbeddingModel model;
  model.d = manifest.at("joint_dim").get<std::size_t>();
  model.d_v = manifest.at("d_v").get<std::size_t>();
  model.d_c = manifest.at("d_c").get<std::size_t>();
  auto read_tensor = [&](const char* name, std::size_t rows, std::size_t cols) {
    const EmbeddingMatrix m =
        load_embeddings(manifest.at("tensors").at(name).get<std::string>());
    if (m.rows != rows || m.dim != cols) {
      throw DataError(data_errc::schema,
                      std::string("load_model: tensor ") + name +
                          " has unexpected shape");
    }
    std::vector<double> out(m.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.data[i];
    return out;
  };
  model.w_v = MatD(model.d, model.d_v);
  model.w_v.data = read_tensor("w_v", model.d, model.d_v);
  model.w_c = MatD(model.d, model.d_c);
  model.w_c.data = read_tensor("w_c", model.d, model.d_c);
  model.b_v = read_tensor("b_v", 1, model.d);
  model.b_c = read_tensor("b_c", 1, model.d);
  return model;
}

}  // namespace mmde

#ifndef MMDE_SOFTLOSS_HPP
#define MMDE_SOFTLOSS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmde/dataset.hpp"

namespace mmde {

// Row-major double matrix used for joint embeddings and similarity grids.
struct MatD {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  MatD() = default;
  MatD(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Linear maps from each modality into a shared d-dimensional space.
struct EmbeddingModel {
  std::size_t d = 0;    // joint dimension
  std::size_t d_v = 0;
  std::size_t d_c = 0;
  MatD w_v;             // d x d_v
  std::vector<double> b_v;
  MatD w_c;             // d x d_c
  std::vector<double> b_c;
};

struct LossConfig {
  double delta = 0.2;  // ranking margin
  std::size_t negatives_per_positive = 0;  // 0 = every other batch member
  double same_group_fraction = 0.5;        // share of same-group negatives
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t joint_dim = 32;
  // weight both hinge directions by the anchor's p_hat (default); the
  // alternative weights only the video->negative-caption direction
  bool weight_both_directions = true;
};

EmbeddingModel init_model(std::size_t d, std::size_t d_v, std::size_t d_c,
                          std::uint64_t seed);

// joint embeddings of all rows: (videos, captions), each M x d
std::pair<MatD, MatD> embed(const EmbeddingModel& model,
                            const PairedDataset& dataset);

// cosine grid between embedded rows: sims[i][j] = cos(video_emb[i], caption_emb[j])
MatD cosine_grid(const MatD& video_emb, const MatD& caption_emb);

// Weighted two-directional margin ranking loss over a square similarity grid.
// Negative sets default to all off-diagonal entries per anchor.
double soft_rank_loss(
    const MatD& sims, std::span<const double> p_hat, double delta,
    const std::vector<std::vector<std::uint32_t>>* negatives = nullptr,
    bool weight_both_directions = true);

struct ParamGrads {
  MatD w_v;
  std::vector<double> b_v;
  MatD w_c;
  std::vector<double> b_c;
};

// Analytic gradient of soft_rank_loss for a batch of dataset rows, through
// the cosine similarities and the linear maps. Also returns the loss.
double soft_rank_grad(
    const PairedDataset& dataset, std::span<const std::uint32_t> batch,
    const EmbeddingModel& model, std::span<const double> p_hat_batch,
    double delta, const std::vector<std::vector<std::uint32_t>>* negatives,
    bool weight_both_directions, ParamGrads& grads);

struct TrainReport {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

// Mini-batch gradient descent at a fixed learning rate; deterministic given
// the seed. p_hat has one weight per dataset row (use all-ones for the
// unweighted baseline).
std::pair<EmbeddingModel, TrainReport> train(const PairedDataset& dataset,
                                             std::span<const double> p_hat,
                                             const LossConfig& cfg);

struct RetrievalMetrics {
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double median_rank = 0.0;
};

// For each test caption, rank all test videos by joint cosine similarity;
// rank 1 is best. Ties resolve toward the smaller video index.
RetrievalMetrics retrieval_eval(const EmbeddingModel& model,
                                const PairedDataset& dataset,
                                std::span<const std::uint32_t> test_indices);

// one binary matrix file per tensor plus a JSON manifest at <prefix>.manifest.json
void save_model(const EmbeddingModel& model, const std::string& prefix);
EmbeddingModel load_model(const std::string& prefix);

}  // namespace mmde

#endif  // MMDE_SOFTLOSS_HPP

#ifndef MMDE_DATASET_HPP
#define MMDE_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmde {

// Dense row-major feature matrix. Values are float32, matching the on-disk
// formats below.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  float* row_ptr(std::size_t i) { return data.data() + i * dim; }
};

// throws DataError on shape/finiteness violations
void validate_matrix(const EmbeddingMatrix& m, const std::string& what);

// M aligned rows in two modalities; row i of one side is (noisily) associated
// with row i of the other. Optional per-row group tokens and binary labels.
struct PairedDataset {
  EmbeddingMatrix videos;
  EmbeddingMatrix captions;
  std::vector<std::string> groups;       // empty or size M
  std::vector<std::uint32_t> group_ids;  // dense ids for groups, same size
  std::vector<std::uint8_t> truth;       // empty or size M, values in {0,1}

  std::size_t size() const { return videos.rows; }
  bool has_groups() const { return !groups.empty(); }
  bool has_truth() const { return !truth.empty(); }
};

// validates cross-invariants and assigns dense group ids
PairedDataset make_dataset(EmbeddingMatrix videos, EmbeddingMatrix captions,
                           std::vector<std::string> groups = {},
                           std::vector<std::uint8_t> truth = {});

// Per-pair scores: mean neighbor similarity and its min-max normalization.
// Stored as float32 so the 9-significant-digit CSV round-trips exactly.
struct NoiseScores {
  std::vector<float> s_bar;
  std::vector<float> p_hat;

  std::size_t size() const { return s_bar.size(); }
};

NoiseScores make_scores(std::span<const double> s_bar,
                        std::span<const double> p_hat);

enum class Combiner { min, mean };
enum class SimKernel { cosine, neg_abs };

// Scoring configuration (neighbor count, similarity kernel, statistics
// sampling and worker count).
struct RunConfig {
  std::size_t k = 4;
  Combiner combiner = Combiner::min;
  SimKernel sim = SimKernel::cosine;
  std::size_t stats_sample = 1000000;  // pairs used for modality statistics
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = all available
};

void validate_config(const RunConfig& cfg);

// --- file formats -----------------------------------------------------------
//
// Binary embeddings: magic "MMDE", u16 LE version (=1), u64 LE row count,
// u32 LE dimension, then rows*dim float32 LE values, row-major.
// CSV embeddings: header "id,x0,...,x{d-1}", one row per index, ascending,
// ids starting at 0. Groups: one token per line. Truth: one 0/1 per line.

// sniffs the magic bytes and dispatches to the binary or CSV reader
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings_binary(const EmbeddingMatrix& m, const std::string& path);
void save_embeddings_csv(const EmbeddingMatrix& m, const std::string& path);

std::vector<std::string> load_groups(const std::string& path);
void save_groups(const std::vector<std::string>& groups,
                 const std::string& path);
std::vector<std::uint8_t> load_truth(const std::string& path);
void save_truth(const std::vector<std::uint8_t>& truth,
                const std::string& path);

PairedDataset load_dataset(const std::string& video_path,
                           const std::string& caption_path,
                           const std::optional<std::string>& groups_path = {},
                           const std::optional<std::string>& truth_path = {});

// Score CSV: header "index,group,s_bar,p_hat"; group column empty when the
// dataset has no groups; floats printed with 9 significant digits.
void save_scores(const NoiseScores& scores, const PairedDataset& dataset,
                 const std::string& path);
NoiseScores load_scores(const std::string& path);

// shared float formatting (9 significant digits, locale independent)
std::string format_g9(double v);

}  // namespace mmde

#endif  // MMDE_DATASET_HPP

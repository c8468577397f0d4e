#include "mmde/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mmde/error.hpp"

namespace mmde {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'D', 'E'};
constexpr std::uint16_t kVersion = 1;

[[noreturn]] void fail(data_errc code, const std::string& msg) {
  throw DataError(code, msg);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double parse_double(std::string_view field, const std::string& context) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail(data_errc::bad_value, context + ": cannot parse number '" +
                                   std::string(field) + "'");
  }
  return value;
}

std::uint64_t parse_index(std::string_view field, const std::string& context) {
  std::uint64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(data_errc::bad_value, context + ": cannot parse index '" +
                                   std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

EmbeddingMatrix load_embeddings_binary(std::ifstream& in,
                                       const std::string& path) {
  char magic[4];
  std::uint8_t header[2 + 8 + 4];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(data_errc::bad_magic, "load_embeddings: bad signature in " + path);
  }
  const std::uint16_t version =
      static_cast<std::uint16_t>(header[0]) |
      static_cast<std::uint16_t>(header[1]) << 8;
  if (version != kVersion) {
    fail(data_errc::bad_magic, "load_embeddings: unsupported version " +
                                   std::to_string(version) + " in " + path);
  }
  std::uint64_t rows = 0;
  for (int i = 0; i < 8; ++i) rows |= std::uint64_t(header[2 + i]) << (8 * i);
  std::uint32_t dim = 0;
  for (int i = 0; i < 4; ++i) dim |= std::uint32_t(header[10 + i]) << (8 * i);
  if (rows == 0 || dim == 0) {
    fail(data_errc::bad_header,
         "load_embeddings: zero rows or dimension in " + path);
  }
  EmbeddingMatrix m;
  m.rows = rows;
  m.dim = dim;
  m.data.resize(rows * static_cast<std::size_t>(dim));
  // values are float32 LE; host is little-endian on all supported targets
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(m.data.size() * sizeof(float))) {
    fail(data_errc::schema, "load_embeddings: truncated payload in " + path);
  }
  char extra;
  if (in.read(&extra, 1)) {
    fail(data_errc::schema, "load_embeddings: trailing bytes in " + path);
  }
  validate_matrix(m, path);
  return m;
}

EmbeddingMatrix load_embeddings_csv(std::ifstream& in,
                                    const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    fail(data_errc::bad_header, "load_embeddings: empty file " + path);
  }
  line = strip_cr(line);
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "id") {
    fail(data_errc::bad_header, "load_embeddings: bad header in " + path);
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 1] != "x" + std::to_string(j)) {
      fail(data_errc::bad_header, "load_embeddings: bad header column " +
                                      std::string(header[j + 1]) + " in " +
                                      path);
    }
  }
  EmbeddingMatrix m;
  m.dim = dim;
  std::size_t expect = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != dim + 1) {
      fail(data_errc::schema, "load_embeddings: row " + std::to_string(expect) +
                                  " has " + std::to_string(fields.size() - 1) +
                                  " values, expected " + std::to_string(dim) +
                                  " in " + path);
    }
    if (parse_index(fields[0], path) != expect) {
      fail(data_errc::schema,
           "load_embeddings: non-ascending id at row " +
               std::to_string(expect) + " in " + path);
    }
    for (std::size_t j = 0; j < dim; ++j) {
      m.data.push_back(static_cast<float>(parse_double(fields[j + 1], path)));
    }
    ++expect;
  }
  m.rows = expect;
  if (m.rows == 0) {
    fail(data_errc::bad_header, "load_embeddings: no data rows in " + path);
  }
  validate_matrix(m, path);
  return m;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(data_errc::io, "cannot open for writing: " + path);
  return out;
}

}  // namespace

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void validate_matrix(const EmbeddingMatrix& m, const std::string& what) {
  if (m.rows == 0 || m.dim == 0) {
    fail(data_errc::bad_header, what + ": empty matrix");
  }
  if (m.data.size() != m.rows * m.dim) {
    fail(data_errc::schema, what + ": data length does not match rows*dim");
  }
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (!std::isfinite(m.data[i])) {
      fail(data_errc::non_finite,
           what + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

PairedDataset make_dataset(EmbeddingMatrix videos, EmbeddingMatrix captions,
                           std::vector<std::string> groups,
                           std::vector<std::uint8_t> truth) {
  validate_matrix(videos, "videos");
  validate_matrix(captions, "captions");
  if (videos.rows != captions.rows) {
    fail(data_errc::row_mismatch,
         "make_dataset: videos have " + std::to_string(videos.rows) +
             " rows, captions have " + std::to_string(captions.rows));
  }
  const std::size_t m = videos.rows;
  if (!groups.empty() && groups.size() != m) {
    fail(data_errc::row_mismatch,
         "make_dataset: " + std::to_string(groups.size()) + " group tokens for " +
             std::to_string(m) + " rows");
  }
  if (!truth.empty() && truth.size() != m) {
    fail(data_errc::row_mismatch,
         "make_dataset: " + std::to_string(truth.size()) + " labels for " +
             std::to_string(m) + " rows");
  }
  for (const auto& g : groups) {
    if (g.empty() || g.find(',') != std::string::npos) {
      fail(data_errc::bad_value,
           "make_dataset: group tokens must be non-empty and comma-free");
    }
  }
  for (const auto t : truth) {
    if (t > 1) fail(data_errc::bad_labels, "make_dataset: labels must be 0/1");
  }
  PairedDataset ds;
  ds.videos = std::move(videos);
  ds.captions = std::move(captions);
  ds.truth = std::move(truth);
  if (!groups.empty()) {
    std::unordered_map<std::string, std::uint32_t> ids;
    ds.group_ids.reserve(m);
    for (const auto& g : groups) {
      auto [it, fresh] =
          ids.emplace(g, static_cast<std::uint32_t>(ids.size()));
      ds.group_ids.push_back(it->second);
      (void)fresh;
    }
    ds.groups = std::move(groups);
  }
  return ds;
}

NoiseScores make_scores(std::span<const double> s_bar,
                        std::span<const double> p_hat) {
  NoiseScores scores;
  scores.s_bar.assign(s_bar.begin(), s_bar.end());
  scores.p_hat.assign(p_hat.begin(), p_hat.end());
  return scores;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.k == 0) throw UsageError("config: k must be at least 1");
  if (cfg.stats_sample < 1000) {
    throw UsageError("config: stats_sample must be at least 1000");
  }
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(data_errc::io, "cannot open: " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, kMagic, 4) == 0) return load_embeddings_binary(in, path);
  return load_embeddings_csv(in, path);
}

void save_embeddings_binary(const EmbeddingMatrix& m, const std::string& path) {
  validate_matrix(m, path);
  auto out = open_out(path);
  out.write(kMagic, 4);
  std::uint8_t header[2 + 8 + 4];
  header[0] = kVersion & 0xFF;
  header[1] = kVersion >> 8;
  for (int i = 0; i < 8; ++i) {
    header[2 + i] = static_cast<std::uint8_t>((std::uint64_t(m.rows) >> (8 * i)) & 0xFF);
  }
  for (int i = 0; i < 4; ++i) {
    header[10 + i] = static_cast<std::uint8_t>((std::uint32_t(m.dim) >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!out) fail(data_errc::io, "write failed: " + path);
}

void save_embeddings_csv(const EmbeddingMatrix& m, const std::string& path) {
  validate_matrix(m, path);
  auto out = open_out(path);
  out << "id";
  for (std::size_t j = 0; j < m.dim; ++j) out << ",x" << j;
  out << "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    out << i;
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.dim; ++j) out << ',' << format_g9(row[j]);
    out << "\n";
  }
  if (!out) fail(data_errc::io, "write failed: " + path);
}

std::vector<std::string> load_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(data_errc::io, "cannot open: " + path);
  std::vector<std::string> groups;
  std::string line;
  while (std::getline(in, line)) groups.push_back(strip_cr(line));
  while (!groups.empty() && groups.back().empty()) groups.pop_back();
  return groups;
}

void save_groups(const std::vector<std::string>& groups,
                 const std::string& path) {
  auto out = open_out(path);
  for (const auto& g : groups) out << g << "\n";
  if (!out) fail(data_errc::io, "write failed: " + path);
}

std::vector<std::uint8_t> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(data_errc::io, "cannot open: " + path);
  std::vector<std::uint8_t> truth;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    if (line != "0" && line != "1") {
      fail(data_errc::bad_labels, path + ": line " + std::to_string(row) +
                                      " is not 0 or 1");
    }
    truth.push_back(line == "1" ? 1 : 0);
    ++row;
  }
  return truth;
}

void save_truth(const std::vector<std::uint8_t>& truth,
                const std::string& path) {
  auto out = open_out(path);
  for (const auto t : truth) out << (t ? '1' : '0') << "\n";
  if (!out) fail(data_errc::io, "write failed: " + path);
}

PairedDataset load_dataset(const std::string& video_path,
                           const std::string& caption_path,
                           const std::optional<std::string>& groups_path,
                           const std::optional<std::string>& truth_path) {
  EmbeddingMatrix videos = load_embeddings(video_path);
  EmbeddingMatrix captions = load_embeddings(caption_path);
  std::vector<std::string> groups;
  if (groups_path) groups = load_groups(*groups_path);
  std::vector<std::uint8_t> truth;
  if (truth_path) truth = load_truth(*truth_path);
  return make_dataset(std::move(videos), std::move(captions),
                      std::move(groups), std::move(truth));
}

void save_scores(const NoiseScores& scores, const PairedDataset& dataset,
                 const std::string& path) {
  if (scores.size() != dataset.size() ||
      scores.p_hat.size() != scores.s_bar.size()) {
    fail(data_errc::row_mismatch,
         "save_scores: " + std::to_string(scores.size()) + " scores for " +
             std::to_string(dataset.size()) + " rows");
  }
  auto out = open_out(path);
  out << "index,group,s_bar,p_hat\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out << i << ',';
    if (dataset.has_groups()) out << dataset.groups[i];
    out << ',' << format_g9(scores.s_bar[i]) << ','
        << format_g9(scores.p_hat[i]) << "\n";
  }
  if (!out) fail(data_errc::io, "write failed: " + path);
}

NoiseScores load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(data_errc::io, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      strip_cr(line) != "index,group,s_bar,p_hat") {
    fail(data_errc::bad_header, "load_scores: bad header in " + path);
  }
  NoiseScores scores;
  std::size_t expect = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 4) {
      fail(data_errc::schema, "load_scores: row " + std::to_string(expect) +
                                  " has " + std::to_string(fields.size()) +
                                  " columns in " + path);
    }
    if (parse_index(fields[0], path) != expect) {
      fail(data_errc::schema, "load_scores: non-ascending index at row " +
                                  std::to_string(expect) + " in " + path);
    }
    const double s = parse_double(fields[2], path);
    const double p = parse_double(fields[3], path);
    if (!std::isfinite(s) || !std::isfinite(p)) {
      fail(data_errc::non_finite,
           "load_scores: non-finite value at row " + std::to_string(expect));
    }
    if (p < 0.0 || p > 1.0) {
      fail(data_errc::range, "load_scores: p_hat " + format_g9(p) +
                                 " outside [0,1] at row " +
                                 std::to_string(expect));
    }
    scores.s_bar.push_back(static_cast<float>(s));
    scores.p_hat.push_back(static_cast<float>(p));
    ++expect;
  }
  if (scores.size() == 0) {
    fail(data_errc::schema, "load_scores: no data rows in " + path);
  }
  return scores;
}

}  // namespace mmde

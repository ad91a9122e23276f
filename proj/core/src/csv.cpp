#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "firank/dataset.hpp"
#include "firank/error.hpp"

namespace firank {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

int64_t parse_int(const std::string& s, const char* what) {
  int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(std::string("csv: bad integer in column ") + what + ": '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const char* what) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(std::string("csv: bad decimal in column ") + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw DataError("csv: cannot write " + path);
  std::string header;
  for (int64_t c = 0; c < ds.num_categorical; ++c) {
    header += "cat_" + std::to_string(c) + ",";
  }
  for (int64_t k = 0; k < ds.num_dense; ++k) {
    header += "dense_" + std::to_string(k) + ",";
  }
  header += "label\n";
  std::fwrite(header.data(), 1, header.size(), f);

  char buf[64];
  for (int64_t i = 0; i < ds.size(); ++i) {
    std::string line;
    const int32_t* idr = ds.ids_row(i);
    for (int64_t c = 0; c < ds.num_categorical; ++c) {
      line += std::to_string(idr[c]);
      line += ',';
    }
    const double* dr = ds.dense_row(i);
    for (int64_t k = 0; k < ds.num_dense; ++k) {
      std::snprintf(buf, sizeof(buf), "%.6f", dr[k]);
      line += buf;
      line += ',';
    }
    line += ds.labels[static_cast<size_t>(i)] ? '1' : '0';
    line += '\n';
    std::fwrite(line.data(), 1, line.size(), f);
  }
  std::fclose(f);
}

Dataset read_dataset_csv(const std::string& path, const FeatureSchema* schema) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);

  int64_t n_cat = 0, n_dense = 0;
  for (const std::string& col : header) {
    if (col.rfind("cat_", 0) == 0) {
      ++n_cat;
    } else if (col.rfind("dense_", 0) == 0) {
      ++n_dense;
    } else if (col != "label") {
      throw DataError("csv: unexpected column '" + col + "'");
    }
  }
  if (header.empty() || header.back() != "label") {
    throw DataError("csv: last column must be 'label'");
  }
  if (schema != nullptr) {
    if (n_cat != schema->categorical_count() || n_dense != schema->dense_count) {
      throw DataError("csv: column layout does not match schema");
    }
  }

  Dataset ds;
  ds.num_categorical = n_cat;
  ds.num_dense = n_dense;

  int64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (static_cast<int64_t>(cells.size()) != n_cat + n_dense + 1) {
      throw DataError("csv: row " + std::to_string(row) + " has wrong field count");
    }
    for (int64_t c = 0; c < n_cat; ++c) {
      const int64_t v = parse_int(cells[static_cast<size_t>(c)], "cat");
      if (schema != nullptr) {
        const int64_t vocab = schema->categorical_vocab_sizes[static_cast<size_t>(c)];
        if (v < 0 || v >= vocab) {
          throw VocabError("csv: row " + std::to_string(row) + " id " + std::to_string(v) +
                           " outside vocab of cat_" + std::to_string(c));
        }
      } else if (v < 0) {
        throw DataError("csv: negative categorical id at row " + std::to_string(row));
      }
      ds.ids.push_back(static_cast<int32_t>(v));
    }
    for (int64_t k = 0; k < n_dense; ++k) {
      ds.dense.push_back(parse_double(cells[static_cast<size_t>(n_cat + k)], "dense"));
    }
    const int64_t y = parse_int(cells.back(), "label");
    if (y != 0 && y != 1) {
      throw DataError("csv: label must be 0/1 at row " + std::to_string(row));
    }
    ds.labels.push_back(static_cast<uint8_t>(y));
  }
  return ds;
}

}  // namespace firank

#include "gam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gam/errors.hpp"
#include "gam/rng.hpp"

namespace gam {

int Dataset::num_classes() const {
  int k = 0;
  for (int v : y) k = std::max(k, v + 1);
  return k;
}

Batch Dataset::make_batch(std::span<const std::size_t> idx) const {
  Batch b;
  b.inputs = Matrix(idx.size(), X.cols);
  b.indices.assign(idx.begin(), idx.end());
  if (!y.empty()) b.labels.resize(idx.size());
  if (Y.rows > 0) b.targets = Matrix(idx.size(), Y.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::size_t s = idx[r];
    for (std::size_t c = 0; c < X.cols; ++c) b.inputs.at(r, c) = X.at(s, c);
    if (!y.empty()) b.labels[r] = y[s];
    if (Y.rows > 0) {
      for (std::size_t c = 0; c < Y.cols; ++c) b.targets.at(r, c) = Y.at(s, c);
    }
  }
  return b;
}

Batch Dataset::full_batch() const {
  std::vector<std::size_t> idx(n());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(idx);
}

namespace {

Dataset moons_split(std::size_t n, double noise, Rng& rng) {
  Dataset d;
  const std::size_t n_out = n / 2;
  const std::size_t n_in = n - n_out;
  d.X = Matrix(n, 2);
  d.y.resize(n);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = n_out > 1 ? std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(n_out - 1)
                               : 0.0;
    d.X.at(i, 0) = std::cos(t);
    d.X.at(i, 1) = std::sin(t);
    d.y[i] = 0;
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = n_in > 1 ? std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(n_in - 1)
                              : 0.0;
    d.X.at(n_out + i, 0) = 1.0 - std::cos(t);
    d.X.at(n_out + i, 1) = 1.0 - std::sin(t) - 0.5;
    d.y[n_out + i] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    d.X.at(i, 0) += noise * rng.normal();
    d.X.at(i, 1) += noise * rng.normal();
  }
  return d;
}

}  // namespace

TrainTestData make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw ConfigError("two_moons: n must be at least 2");
  if (noise < 0.0) throw ConfigError("two_moons: noise must be >= 0");
  Rng train_rng(derive_seed(seed, 1));
  Rng test_rng(derive_seed(seed, 2));
  TrainTestData out;
  out.train = moons_split(n, noise, train_rng);
  out.test = moons_split(std::max<std::size_t>(n / 4, 2), noise, test_rng);
  return out;
}

TrainTestData make_gaussian_blobs(std::size_t n, int k, int dim, double spread,
                                  std::uint64_t seed) {
  if (n < static_cast<std::size_t>(k)) {
    throw ConfigError("gaussian_blobs: n must be >= k");
  }
  if (k < 2) throw ConfigError("gaussian_blobs: k must be >= 2");
  if (dim < 1) throw ConfigError("gaussian_blobs: dim must be >= 1");
  if (spread <= 0.0) throw ConfigError("gaussian_blobs: spread must be > 0");

  Rng center_rng(derive_seed(seed, 1));
  Matrix centers(static_cast<std::size_t>(k), static_cast<std::size_t>(dim));
  for (auto& v : centers.data) v = center_rng.uniform(-5.0, 5.0);

  auto sample = [&](std::size_t count, Rng& rng) {
    Dataset d;
    d.X = Matrix(count, static_cast<std::size_t>(dim));
    d.y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const int cls = static_cast<int>(i % static_cast<std::size_t>(k));
      d.y[i] = cls;
      for (int c = 0; c < dim; ++c) {
        d.X.at(i, static_cast<std::size_t>(c)) =
            centers.at(static_cast<std::size_t>(cls),
                       static_cast<std::size_t>(c)) +
            spread * rng.normal();
      }
    }
    return d;
  };

  Rng train_rng(derive_seed(seed, 2));
  Rng test_rng(derive_seed(seed, 3));
  TrainTestData out;
  out.train = sample(n, train_rng);
  out.test = sample(std::max<std::size_t>(n / 4, static_cast<std::size_t>(k)),
                    test_rng);
  return out;
}

TrainTestData make_quadratic_dataset() {
  TrainTestData out;
  out.train.X = Matrix(1, 0);
  out.test.X = Matrix(1, 0);
  return out;
}

namespace {

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

TrainTestData split_80_20(Dataset&& all, std::uint64_t seed) {
  const std::size_t n = all.n();
  Rng rng(derive_seed(seed, 0x5917));
  auto perm = rng.permutation(n);
  const std::size_t n_test = std::max<std::size_t>(1, n / 5);
  const std::size_t n_train = n - n_test;
  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<std::size_t> test_idx(perm.begin() + n_train, perm.end());
  // keep original row order within each side so the split is stable to read
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&](const std::vector<std::size_t>& idx) {
    Dataset d;
    d.X = Matrix(idx.size(), all.X.cols);
    if (!all.y.empty()) d.y.resize(idx.size());
    if (all.Y.rows > 0) d.Y = Matrix(idx.size(), all.Y.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < all.X.cols; ++c)
        d.X.at(r, c) = all.X.at(idx[r], c);
      if (!all.y.empty()) d.y[r] = all.y[idx[r]];
      if (all.Y.rows > 0)
        for (std::size_t c = 0; c < all.Y.cols; ++c)
          d.Y.at(r, c) = all.Y.at(idx[r], c);
    }
    return d;
  };

  TrainTestData out;
  out.train = take(train_idx);
  out.test = take(test_idx);
  return out;
}

}  // namespace

TrainTestData load_csv(const std::filesystem::path& path, int label_col,
                       std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv file: " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_checked = false;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> toks;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    if (!header_checked) {
      header_checked = true;
      double tmp;
      bool numeric = true;
      for (const auto& t : toks)
        if (!parse_double(t, tmp)) numeric = false;
      if (!numeric) continue;  // header line
    }
    std::vector<double> vals(toks.size());
    for (std::size_t c = 0; c < toks.size(); ++c) {
      if (!parse_double(toks[c], vals[c])) {
        throw IoError("csv parse error at " + path.string() + ":" +
                      std::to_string(line_no) + " column " + std::to_string(c) +
                      ": '" + toks[c] + "' is not a number");
      }
    }
    if (width == 0) {
      width = vals.size();
      if (width < 2) {
        throw IoError("csv row " + std::to_string(line_no) +
                      " has fewer than 2 columns");
      }
    } else if (vals.size() != width) {
      throw IoError("csv row " + std::to_string(line_no) + " has " +
                    std::to_string(vals.size()) + " columns, expected " +
                    std::to_string(width));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.size() < 2) throw IoError("csv has fewer than 2 data rows");
  if (label_col < 0 || static_cast<std::size_t>(label_col) >= width) {
    throw ConfigError("csv label_col " + std::to_string(label_col) +
                      " out of range for " + std::to_string(width) +
                      " columns");
  }

  bool integral = true;
  for (const auto& r : rows) {
    const double v = r[static_cast<std::size_t>(label_col)];
    if (v != std::floor(v) || v < 0.0) integral = false;
  }

  Dataset all;
  all.X = Matrix(rows.size(), width - 1);
  if (integral) {
    all.y.resize(rows.size());
  } else {
    all.Y = Matrix(rows.size(), 1);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t cc = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == static_cast<std::size_t>(label_col)) continue;
      all.X.at(r, cc++) = rows[r][c];
    }
    const double lv = rows[r][static_cast<std::size_t>(label_col)];
    if (integral) {
      all.y[r] = static_cast<int>(lv);
    } else {
      all.Y.at(r, 0) = lv;
    }
  }
  return split_80_20(std::move(all), seed);
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("idx: truncated " + what);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

TrainTestData load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path,
                       std::size_t subset_n, std::uint64_t seed) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw IoError("cannot open idx images: " + images_path.string());
  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw IoError("cannot open idx labels: " + labels_path.string());

  const std::uint32_t img_magic = read_be32(imgs, "image magic");
  if (img_magic != 0x00000803u) {
    throw IoError("idx images: bad magic " + std::to_string(img_magic) +
                  ", expected 2051");
  }
  const std::uint32_t n_img = read_be32(imgs, "image count");
  const std::uint32_t h = read_be32(imgs, "image rows");
  const std::uint32_t w = read_be32(imgs, "image cols");

  const std::uint32_t lab_magic = read_be32(labs, "label magic");
  if (lab_magic != 0x00000801u) {
    throw IoError("idx labels: bad magic " + std::to_string(lab_magic) +
                  ", expected 2049");
  }
  const std::uint32_t n_lab = read_be32(labs, "label count");
  if (n_img != n_lab) {
    throw IoError("idx: image count " + std::to_string(n_img) +
                  " != label count " + std::to_string(n_lab));
  }

  std::size_t n = n_img;
  if (subset_n > 0) n = std::min<std::size_t>(n, subset_n);
  const std::size_t pix = static_cast<std::size_t>(h) * w;

  Dataset all;
  all.X = Matrix(n, pix);
  all.y.resize(n);
  std::vector<unsigned char> buf(pix);
  for (std::size_t i = 0; i < n; ++i) {
    if (!imgs.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(pix))) {
      throw IoError("idx: truncated image data at example " +
                    std::to_string(i));
    }
    for (std::size_t p = 0; p < pix; ++p) {
      all.X.at(i, p) = static_cast<double>(buf[p]) / 255.0;
    }
    unsigned char lab;
    if (!labs.read(reinterpret_cast<char*>(&lab), 1)) {
      throw IoError("idx: truncated label data at example " +
                    std::to_string(i));
    }
    all.y[i] = static_cast<int>(lab);
  }
  return split_80_20(std::move(all), seed);
}

Matrix one_hot(const std::vector<int>& labels, int num_classes) {
  Matrix m(labels.size(), static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

}  // namespace gam

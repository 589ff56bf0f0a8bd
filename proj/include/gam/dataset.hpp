#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gam {

// Row-major dense matrix; enough for desk-scale batches.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

// One minibatch. labels for classification, targets for regression; a batch
// carries whichever the task needs (possibly both empty for batch-free
// losses). indices are source-dataset rows, kept for provenance.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  Matrix targets;
  std::vector<std::size_t> indices;

  std::size_t size() const { return inputs.rows; }
};

struct Dataset {
  Matrix X;
  std::vector<int> y;  // empty when the task has no class labels
  Matrix Y;            // regression targets; rows == 0 when unused

  std::size_t n() const { return X.rows; }
  int num_classes() const;

  Batch make_batch(std::span<const std::size_t> idx) const;
  Batch full_batch() const;
};

struct TrainTestData {
  Dataset train;
  Dataset test;
};

// Two interleaved half-circles, the lower one shifted; angles on a linspace,
// Gaussian noise on top. Test split drawn with an independent noise stream.
TrainTestData make_two_moons(std::size_t n, double noise, std::uint64_t seed);

// k isotropic Gaussian clusters with uniformly drawn centers in [-5, 5]^dim.
TrainTestData make_gaussian_blobs(std::size_t n, int k, int dim, double spread,
                                  std::uint64_t seed);

// Placeholder dataset for batch-independent losses: one row, zero features.
TrainTestData make_quadratic_dataset();

// Numeric CSV with one label column (0-based). An optional single header
// line is detected by non-numeric tokens. Malformed cells raise IoError
// naming row and column. Split 80/20 by a seeded permutation.
TrainTestData load_csv(const std::filesystem::path& path, int label_col,
                       std::uint64_t seed);

// IDX image/label pair (big-endian magics 0x00000803 / 0x00000801). Pixels
// are scaled to [0, 1] as v/255. subset_n == 0 keeps everything.
TrainTestData load_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path,
                       std::size_t subset_n, std::uint64_t seed);

// One-hot targets derived from labels; used when an MSE task trains on a
// classification dataset.
Matrix one_hot(const std::vector<int>& labels, int num_classes);

}  // namespace gam

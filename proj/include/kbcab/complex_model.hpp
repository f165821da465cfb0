#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kbcab/triplet_store.hpp"
#include "kbcab/vocabulary.hpp"

namespace kbcab {

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Real and imaginary halves of the complex entity and relation embeddings.
// Also used for gradients and optimizer moments, which share the shapes.
struct EmbeddingTables {
  Matrix entity_re, entity_im;
  Matrix relation_re, relation_im;

  EmbeddingTables() = default;
  EmbeddingTables(std::size_t entities, std::size_t relations, std::size_t dim)
      : entity_re(entities, dim),
        entity_im(entities, dim),
        relation_re(relations, dim),
        relation_im(relations, dim) {}

  void fill(double v) {
    for (Matrix* m : {&entity_re, &entity_im, &relation_re, &relation_im}) m->fill(v);
  }
  bool operator==(const EmbeddingTables&) const = default;
};

struct ModelParams : EmbeddingTables {
  Vocabulary vocab;
  std::size_t dim = 0;

  std::size_t entity_count() const { return entity_re.rows(); }
  std::size_t relation_count() const { return relation_re.rows(); }

  // Throws ArgumentError when shapes disagree with vocab/dim or a value is not finite.
  void check() const;
};

// Entries ~ Gaussian(0, 1/sqrt(dim)), deterministic per seed.
ModelParams init_params(Vocabulary vocab, std::size_t dim, std::uint64_t seed);

double sigmoid(double x);

// Re(<e_s, e_r, conj(e_o)>); one pass over the n components.
double raw_score(const ModelParams& p, EntityId s, RelationId r, EntityId o);
double score(const ModelParams& p, EntityId s, RelationId r, EntityId o);

// Element o equals raw_score / score(p, s, r, o) bit for bit.
std::vector<double> raw_score_1n(const ModelParams& p, EntityId s, RelationId r);
std::vector<double> score_1n(const ModelParams& p, EntityId s, RelationId r);

struct TrainingExample {
  Triplet triplet;
  int label = 1;  // 1 for facts, 0 for negatives
};

// (s, r) scored against every entity; `positives` lists the objects with
// label 1 and must stay alive for the duration of the call.
struct LabelRow {
  EntityId s = 0;
  RelationId r = 0;
  std::span<const EntityId> positives;
};

struct LossAndGrads {
  double loss = 0.0;
  EmbeddingTables grads;
};

inline constexpr double kLogClamp = 1e-12;

// Negative log-likelihood summed over the batch plus l2 * squared norm of
// every distinct embedding row the batch touches. Gradients are zero for
// untouched rows.
LossAndGrads loss_and_grads(const ModelParams& p, std::span<const TrainingExample> batch,
                            double l2 = 0.0);

// Same objective over {((s,r,o), [o in positives]) : all o}, computed with one
// pass per (s,r) row instead of |E| separate triplet evaluations.
LossAndGrads loss_and_grads_1n(const ModelParams& p, std::span<const LabelRow> rows,
                               double l2 = 0.0);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  EmbeddingTables m, v;

  static AdamState for_params(const ModelParams& p) {
    return {0, EmbeddingTables(p.entity_count(), p.relation_count(), p.dim),
            EmbeddingTables(p.entity_count(), p.relation_count(), p.dim)};
  }
};

// Bias-corrected Adam update. Throws TrainingError on a non-finite gradient
// and ArgumentError on shape mismatch; params are untouched in both cases.
void adam_step(AdamState& state, ModelParams& p, const EmbeddingTables& grads,
               const AdamConfig& cfg);

enum class TrainMode { one_to_n, negative_sampling };

struct TrainConfig {
  std::size_t dim = 50;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::one_to_n;
  std::size_t negative_ratio = 1;
  double l2 = 0.0;
  AdamConfig adam;

  void validate() const;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Seeded, single-threaded training; reruns with the same inputs are
// bitwise-identical. In 1-N mode a batch is `batch_size` (s,r) rows, in
// negative-sampling mode `batch_size` facts plus their corrupted objects.
ModelParams train(const TripletStore& store, const Vocabulary& vocab, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace kbcab

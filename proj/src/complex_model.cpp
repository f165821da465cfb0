#include "kbcab/complex_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kbcab/error.hpp"

namespace kbcab {

namespace {

void check_ids(const ModelParams& p, EntityId s, RelationId r, EntityId o) {
  if (s < 0 || static_cast<std::size_t>(s) >= p.entity_count())
    throw ArgumentError("subject id out of range: " + std::to_string(s));
  if (o < 0 || static_cast<std::size_t>(o) >= p.entity_count())
    throw ArgumentError("object id out of range: " + std::to_string(o));
  if (r < 0 || static_cast<std::size_t>(r) >= p.relation_count())
    throw ArgumentError("relation id out of range: " + std::to_string(r));
}

std::size_t idx(std::int32_t id) { return static_cast<std::size_t>(id); }

// q = e_s * e_r (complex, elementwise)
void subject_relation_product(const ModelParams& p, EntityId s, RelationId r,
                              std::vector<double>& q_re, std::vector<double>& q_im) {
  auto sr = p.entity_re.row(idx(s)), si = p.entity_im.row(idx(s));
  auto rr = p.relation_re.row(idx(r)), ri = p.relation_im.row(idx(r));
  q_re.resize(p.dim);
  q_im.resize(p.dim);
  for (std::size_t i = 0; i < p.dim; ++i) {
    q_re[i] = sr[i] * rr[i] - si[i] * ri[i];
    q_im[i] = sr[i] * ri[i] + si[i] * rr[i];
  }
}

double clamped_nll(double psi, int label) {
  const double c = std::clamp(psi, kLogClamp, 1.0 - kLogClamp);
  return label ? -std::log(c) : -std::log(1.0 - c);
}

double add_l2(const ModelParams& p, EmbeddingTables& g, double l2,
              const std::vector<bool>& entities, const std::vector<bool>& relations) {
  if (l2 == 0.0) return 0.0;
  double penalty = 0.0;
  auto rows = [&](const Matrix& re, const Matrix& im, Matrix& gre, Matrix& gim,
                  const std::vector<bool>& touched) {
    for (std::size_t k = 0; k < touched.size(); ++k) {
      if (!touched[k]) continue;
      for (std::size_t i = 0; i < p.dim; ++i) {
        penalty += re(k, i) * re(k, i) + im(k, i) * im(k, i);
        gre(k, i) += 2.0 * l2 * re(k, i);
        gim(k, i) += 2.0 * l2 * im(k, i);
      }
    }
  };
  rows(p.entity_re, p.entity_im, g.entity_re, g.entity_im, entities);
  rows(p.relation_re, p.relation_im, g.relation_re, g.relation_im, relations);
  return l2 * penalty;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void ModelParams::check() const {
  if (dim == 0) throw ArgumentError("dim must be >= 1");
  if (entity_re.rows() != vocab.entity_count() || entity_im.rows() != vocab.entity_count())
    throw ArgumentError("entity table rows do not match vocabulary");
  if (relation_re.rows() != vocab.relation_count() || relation_im.rows() != vocab.relation_count())
    throw ArgumentError("relation table rows do not match vocabulary");
  for (const Matrix* m : {&entity_re, &entity_im, &relation_re, &relation_im}) {
    if (m->cols() != dim) throw ArgumentError("table width does not match dim");
    if (!all_finite(*m)) throw ArgumentError("non-finite parameter value");
  }
}

ModelParams init_params(Vocabulary vocab, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ArgumentError("dim must be >= 1");
  if (vocab.entity_count() == 0 || vocab.relation_count() == 0)
    throw ArgumentError("vocabulary must contain entities and relations");
  ModelParams p;
  static_cast<EmbeddingTables&>(p) =
      EmbeddingTables(vocab.entity_count(), vocab.relation_count(), dim);
  p.vocab = std::move(vocab);
  p.dim = dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (Matrix* m : {&p.entity_re, &p.entity_im, &p.relation_re, &p.relation_im})
    for (double& x : m->data()) x = gauss(rng);
  return p;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double raw_score(const ModelParams& p, EntityId s, RelationId r, EntityId o) {
  check_ids(p, s, r, o);
  const double* sr = p.entity_re.row(idx(s)).data();
  const double* si = p.entity_im.row(idx(s)).data();
  const double* rr = p.relation_re.row(idx(r)).data();
  const double* ri = p.relation_im.row(idx(r)).data();
  const double* orr = p.entity_re.row(idx(o)).data();
  const double* oi = p.entity_im.row(idx(o)).data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.dim; ++i) {
    const double q_re = sr[i] * rr[i] - si[i] * ri[i];
    const double q_im = sr[i] * ri[i] + si[i] * rr[i];
    acc += q_re * orr[i] + q_im * oi[i];
  }
  return acc;
}

double score(const ModelParams& p, EntityId s, RelationId r, EntityId o) {
  return sigmoid(raw_score(p, s, r, o));
}

std::vector<double> raw_score_1n(const ModelParams& p, EntityId s, RelationId r) {
  check_ids(p, s, r, 0);
  std::vector<double> q_re, q_im;
  subject_relation_product(p, s, r, q_re, q_im);
  std::vector<double> out(p.entity_count());
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double* orr = p.entity_re.row(o).data();
    const double* oi = p.entity_im.row(o).data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.dim; ++i) acc += q_re[i] * orr[i] + q_im[i] * oi[i];
    out[o] = acc;
  }
  return out;
}

std::vector<double> score_1n(const ModelParams& p, EntityId s, RelationId r) {
  auto out = raw_score_1n(p, s, r);
  for (double& x : out) x = sigmoid(x);
  return out;
}

LossAndGrads loss_and_grads(const ModelParams& p, std::span<const TrainingExample> batch,
                            double l2) {
  if (batch.empty()) throw ArgumentError("empty batch");
  LossAndGrads out{0.0, EmbeddingTables(p.entity_count(), p.relation_count(), p.dim)};
  EmbeddingTables& g = out.grads;
  std::vector<bool> touched_e(p.entity_count(), false), touched_r(p.relation_count(), false);

  for (const auto& ex : batch) {
    const auto [s, r, o] = ex.triplet;
    const double psi = sigmoid(raw_score(p, s, r, o));
    out.loss += clamped_nll(psi, ex.label);
    const double delta = psi - static_cast<double>(ex.label);
    touched_e[idx(s)] = touched_e[idx(o)] = true;
    touched_r[idx(r)] = true;

    auto sr = p.entity_re.row(idx(s)), si = p.entity_im.row(idx(s));
    auto rr = p.relation_re.row(idx(r)), ri = p.relation_im.row(idx(r));
    auto orr = p.entity_re.row(idx(o)), oi = p.entity_im.row(idx(o));
    auto gsr = g.entity_re.row(idx(s)), gsi = g.entity_im.row(idx(s));
    auto grr = g.relation_re.row(idx(r)), gri = g.relation_im.row(idx(r));
    auto gor = g.entity_re.row(idx(o)), goi = g.entity_im.row(idx(o));
    for (std::size_t i = 0; i < p.dim; ++i) {
      // partials of sr*rr*or + si*rr*oi + sr*ri*oi - si*ri*or
      const double d_sr = rr[i] * orr[i] + ri[i] * oi[i];
      const double d_si = rr[i] * oi[i] - ri[i] * orr[i];
      const double d_rr = sr[i] * orr[i] + si[i] * oi[i];
      const double d_ri = sr[i] * oi[i] - si[i] * orr[i];
      const double d_or = sr[i] * rr[i] - si[i] * ri[i];
      const double d_oi = si[i] * rr[i] + sr[i] * ri[i];
      gsr[i] += delta * d_sr;
      gsi[i] += delta * d_si;
      grr[i] += delta * d_rr;
      gri[i] += delta * d_ri;
      gor[i] += delta * d_or;
      goi[i] += delta * d_oi;
    }
  }
  out.loss += add_l2(p, g, l2, touched_e, touched_r);
  return out;
}

LossAndGrads loss_and_grads_1n(const ModelParams& p, std::span<const LabelRow> rows, double l2) {
  if (rows.empty()) throw ArgumentError("empty batch");
  const std::size_t n_ent = p.entity_count();
  LossAndGrads out{0.0, EmbeddingTables(n_ent, p.relation_count(), p.dim)};
  EmbeddingTables& g = out.grads;
  std::vector<bool> touched_e(n_ent, true), touched_r(p.relation_count(), false);

  std::vector<double> q_re, q_im, gq_re(p.dim), gq_im(p.dim), labels(n_ent);
  for (const LabelRow& row : rows) {
    check_ids(p, row.s, row.r, 0);
    touched_r[idx(row.r)] = true;
    std::fill(labels.begin(), labels.end(), 0.0);
    for (EntityId o : row.positives) {
      if (o < 0 || idx(o) >= n_ent) throw ArgumentError("label object id out of range");
      labels[idx(o)] = 1.0;
    }
    subject_relation_product(p, row.s, row.r, q_re, q_im);
    std::fill(gq_re.begin(), gq_re.end(), 0.0);
    std::fill(gq_im.begin(), gq_im.end(), 0.0);

    for (std::size_t o = 0; o < n_ent; ++o) {
      const double* orr = p.entity_re.row(o).data();
      const double* oi = p.entity_im.row(o).data();
      double acc = 0.0;
      for (std::size_t i = 0; i < p.dim; ++i) acc += q_re[i] * orr[i] + q_im[i] * oi[i];
      const double psi = sigmoid(acc);
      const int t = labels[o] != 0.0 ? 1 : 0;
      out.loss += clamped_nll(psi, t);
      const double delta = psi - labels[o];
      double* gor = g.entity_re.row(o).data();
      double* goi = g.entity_im.row(o).data();
      for (std::size_t i = 0; i < p.dim; ++i) {
        gor[i] += delta * q_re[i];
        goi[i] += delta * q_im[i];
        gq_re[i] += delta * orr[i];
        gq_im[i] += delta * oi[i];
      }
    }

    auto sr = p.entity_re.row(idx(row.s)), si = p.entity_im.row(idx(row.s));
    auto rr = p.relation_re.row(idx(row.r)), ri = p.relation_im.row(idx(row.r));
    auto gsr = g.entity_re.row(idx(row.s)), gsi = g.entity_im.row(idx(row.s));
    auto grr = g.relation_re.row(idx(row.r)), gri = g.relation_im.row(idx(row.r));
    for (std::size_t i = 0; i < p.dim; ++i) {
      gsr[i] += gq_re[i] * rr[i] + gq_im[i] * ri[i];
      gsi[i] += -gq_re[i] * ri[i] + gq_im[i] * rr[i];
      grr[i] += gq_re[i] * sr[i] + gq_im[i] * si[i];
      gri[i] += -gq_re[i] * si[i] + gq_im[i] * sr[i];
    }
  }
  out.loss += add_l2(p, g, l2, touched_e, touched_r);
  return out;
}

void adam_step(AdamState& state, ModelParams& p, const EmbeddingTables& grads,
               const AdamConfig& cfg) {
  const Matrix* gs[] = {&grads.entity_re, &grads.entity_im, &grads.relation_re, &grads.relation_im};
  Matrix* ps[] = {&p.entity_re, &p.entity_im, &p.relation_re, &p.relation_im};
  Matrix* ms[] = {&state.m.entity_re, &state.m.entity_im, &state.m.relation_re, &state.m.relation_im};
  Matrix* vs[] = {&state.v.entity_re, &state.v.entity_im, &state.v.relation_re, &state.v.relation_im};
  static constexpr const char* kNames[] = {"entity_re", "entity_im", "relation_re", "relation_im"};

  for (int k = 0; k < 4; ++k) {
    if (gs[k]->rows() != ps[k]->rows() || gs[k]->cols() != ps[k]->cols() ||
        ms[k]->rows() != ps[k]->rows() || ms[k]->cols() != ps[k]->cols() ||
        vs[k]->rows() != ps[k]->rows() || vs[k]->cols() != ps[k]->cols())
      throw ArgumentError(std::string("adam: shape mismatch in ") + kNames[k]);
    const auto& data = gs[k]->data();
    auto bad = std::find_if(data.begin(), data.end(), [](double x) { return !std::isfinite(x); });
    if (bad != data.end()) {
      const auto pos = static_cast<std::size_t>(bad - data.begin());
      throw TrainingError(std::string("non-finite gradient in ") + kNames[k] + " at row " +
                          std::to_string(pos / gs[k]->cols()) + ", column " +
                          std::to_string(pos % gs[k]->cols()) + " (step " +
                          std::to_string(state.step + 1) + ")");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (int k = 0; k < 4; ++k) {
    auto& pd = ps[k]->data();
    auto& md = ms[k]->data();
    auto& vd = vs[k]->data();
    const auto& gd = gs[k]->data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * gd[i];
      vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / c1;
      const double v_hat = vd[i] / c2;
      pd[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (dim < 1) throw ArgumentError("dim must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (mode == TrainMode::negative_sampling && negative_ratio < 1)
    throw ArgumentError("negative ratio must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (l2 < 0.0) throw ArgumentError("l2 coefficient must be >= 0");
}

namespace {

void check_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss))
    throw TrainingError("training diverged: non-finite loss in epoch " + std::to_string(epoch));
}

double epoch_one_to_n(ModelParams& p, AdamState& adam, const TripletStore& store,
                      std::vector<std::pair<EntityId, RelationId>>& keys, std::mt19937_64& rng,
                      const TrainConfig& cfg, std::size_t epoch) {
  std::shuffle(keys.begin(), keys.end(), rng);
  double total = 0.0;
  std::vector<LabelRow> batch;
  for (std::size_t start = 0; start < keys.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(keys.size(), start + cfg.batch_size);
    batch.clear();
    for (std::size_t i = start; i < end; ++i)
      batch.push_back({keys[i].first, keys[i].second, store.objects(keys[i].first, keys[i].second)});
    auto lg = loss_and_grads_1n(p, batch, cfg.l2);
    check_loss(lg.loss, epoch);
    adam_step(adam, p, lg.grads, cfg.adam);
    total += lg.loss;
  }
  return total;
}

double epoch_negative_sampling(ModelParams& p, AdamState& adam, const TripletStore& store,
                               std::vector<Triplet>& facts, std::mt19937_64& rng,
                               const TrainConfig& cfg, std::size_t epoch) {
  std::shuffle(facts.begin(), facts.end(), rng);
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(p.entity_count()) - 1);
  constexpr int kMaxResample = 100;
  double total = 0.0;
  std::vector<TrainingExample> batch;
  for (std::size_t start = 0; start < facts.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(facts.size(), start + cfg.batch_size);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) {
      const Triplet& f = facts[i];
      batch.push_back({f, 1});
      for (std::size_t k = 0; k < cfg.negative_ratio; ++k) {
        EntityId o = pick(rng);
        int tries = 0;
        while (store.contains(f.s, f.r, o) && ++tries < kMaxResample) o = pick(rng);
        // (s,r) related to (almost) every entity: no corruption available
        if (store.contains(f.s, f.r, o)) continue;
        batch.push_back({{f.s, f.r, o}, 0});
      }
    }
    auto lg = loss_and_grads(p, batch, cfg.l2);
    check_loss(lg.loss, epoch);
    adam_step(adam, p, lg.grads, cfg.adam);
    total += lg.loss;
  }
  return total;
}

}  // namespace

ModelParams train(const TripletStore& store, const Vocabulary& vocab, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (store.empty()) throw ArgumentError("cannot train on an empty triplet store");
  for (const Triplet& t : store.triplets()) {
    if (t.s < 0 || idx(t.s) >= vocab.entity_count() || t.o < 0 ||
        idx(t.o) >= vocab.entity_count() || t.r < 0 || idx(t.r) >= vocab.relation_count())
      throw ArgumentError("triplet store ids are inconsistent with the vocabulary");
  }

  ModelParams p = init_params(vocab, cfg.dim, cfg.seed);
  // batch order and negative draws use their own stream
  std::seed_seq order_seed{static_cast<std::uint32_t>(cfg.seed),
                           static_cast<std::uint32_t>(cfg.seed >> 32), 0x6b6263u};
  std::mt19937_64 rng(order_seed);
  AdamState adam = AdamState::for_params(p);

  auto keys = store.subject_relation_keys();
  auto facts = store.to_vector();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double loss = cfg.mode == TrainMode::one_to_n
                            ? epoch_one_to_n(p, adam, store, keys, rng, cfg, epoch)
                            : epoch_negative_sampling(p, adam, store, facts, rng, cfg, epoch);
    if (on_epoch) on_epoch(epoch, loss);
  }
  return p;
}

}  // namespace kbcab

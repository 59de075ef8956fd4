// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "crowdflux/error.hpp"
#include "crowdflux/rng.hpp"

namespace crowdflux {
namespace {

constexpr double kIllConditioned = 1e-12;
constexpr int kMaxStepHalvings = 40;
constexpr double kUnitSlack = 1e-12;

void normalize_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double n = m.col(j).norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::kInvalidConfig, "dictionary atom has zero norm");
    // Rescaling a column that is already unit only flips low bits, which
    // would break exact model reloads.
    if (std::fabs(n - 1.0) > kUnitSlack) m.col(j) /= n;
  }
}

Eigen::MatrixXd gather(std::span<const VisualWord> words, std::span<const Eigen::Index> which) {
  const Eigen::Index T = words.front().values.size();
  Eigen::MatrixXd out(T, static_cast<Eigen::Index>(which.size()));
  for (std::size_t k = 0; k < which.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = words[static_cast<std::size_t>(which[k])].values;
  return out;
}

Eigen::MatrixXd stack(std::span<const VisualWord> words) {
  const Eigen::Index T = words.front().values.size();
  Eigen::MatrixXd out(T, static_cast<Eigen::Index>(words.size()));
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (words[k].values.size() != T) throw Error(ErrorCode::kDimensionMismatch, "words of different lengths");
    out.col(static_cast<Eigen::Index>(k)) = words[k].values;
  }
  return out;
}

// How many informative words a dictionary is fitted to per epoch.
std::size_t neighborhood_size(std::size_t informative, int atoms, double trim) {
  const auto share = static_cast<std::size_t>(std::ceil(trim * static_cast<double>(informative)));
  return std::min(informative, std::max(static_cast<std::size_t>(atoms), share));
}

// One block-coordinate-descent sweep over the columns (exact minimization of
// the quadratic surrogate per column, then projection to the unit sphere).
void bcd_sweep(Eigen::MatrixXd& D, const Eigen::MatrixXd& X, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd A = B * B.transpose();
  const Eigen::MatrixXd XB = X * B.transpose();
  for (Eigen::Index j = 0; j < D.cols(); ++j) {
    const double ajj = A(j, j);
    if (ajj <= 1e-12) continue;
    Eigen::VectorXd u = D.col(j) + (XB.col(j) - D * A.col(j)) / ajj;
    const double n = u.norm();
    if (n > 1e-12 && std::isfinite(n)) D.col(j) = u / n;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Dictionary

Dictionary::Dictionary(int id, Eigen::MatrixXd atoms) : id_(id), atoms_(std::move(atoms)) {
  if (atoms_.cols() < 1 || atoms_.rows() < 2) throw Error(ErrorCode::kInvalidConfig, "empty dictionary");
  if (2 * atoms_.cols() > atoms_.rows()) {
    throw Error(ErrorCode::kInvalidConfig, "atom count d = " + std::to_string(atoms_.cols()) +
                                               " exceeds T/2 for T = " + std::to_string(atoms_.rows()));
  }
  normalize_columns(atoms_);
  factorize();
}

void Dictionary::factorize() {
  Eigen::MatrixXd gram = atoms_.transpose() * atoms_;
  gram_.compute(gram);
  jittered_ = false;
  if (gram_.info() != Eigen::Success || gram_.rcond() < kIllConditioned) {
    gram.diagonal().array() += kGramJitter;
    gram_.compute(gram);
    jittered_ = true;
  }
}

SparseCode Dictionary::code(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != atoms_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "word length " + std::to_string(x.size()) + " vs dictionary T " +
                                                   std::to_string(atoms_.rows()));
  }
  SparseCode out;
  out.dictionary_id = id_;
  out.beta = gram_.solve(atoms_.transpose() * x);
  out.error = (x - atoms_ * out.beta).norm();
  return out;
}

double Dictionary::error(const Eigen::Ref<const Eigen::VectorXd>& x) const { return code(x).error; }

Eigen::MatrixXd Dictionary::code_all(const Eigen::Ref<const Eigen::MatrixXd>& words) const {
  return gram_.solve(atoms_.transpose() * words);
}

SparseCode least_squares_code(const VisualWord& word, const Dictionary& dictionary) {
  return dictionary.code(word.values);
}

// ---------------------------------------------------------------------------
// Classification

Classification classify_word(const VisualWord& word, const GroupDictionary& group) {
  Classification out;
  out.trivial = word.values.norm() < group.lambda;
  for (const Dictionary& d : group.dictionaries) {
    const double e = d.error(word.values);
    out.error = std::min(out.error, e);
    if (e < group.lambda) {
      if (out.dictionary_id < 0) {
        out.dictionary_id = d.id();
        out.label = Label::kNormal;
      } else {
        out.second_id = d.id();
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

void TrainParams::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (!(lambda > 0.0)) fail("lambda must be positive");
  if (atoms < 1) fail("atoms per dictionary must be at least 1");
  if (max_dictionaries < 1) fail("max_dictionaries must be at least 1");
  if (epochs < 0) fail("epochs must be non-negative");
  if (!(coverage > 0.0 && coverage <= 1.0)) fail("coverage must lie in (0, 1]");
  if (!(trim_fraction > 0.0 && trim_fraction <= 1.0)) fail("trim_fraction must lie in (0, 1]");
  if (init_attempts < 1) fail("init_attempts must be at least 1");
}

TrainResult train_group(std::span<const VisualWord> words, const TrainParams& params) {
  params.validate();
  if (words.size() < static_cast<std::size_t>(params.atoms)) {
    throw Error(ErrorCode::kInsufficientWords, std::to_string(words.size()) + " words cannot seed a " +
                                                   std::to_string(params.atoms) + "-atom dictionary");
  }
  const Eigen::MatrixXd all = stack(words);
  const Eigen::Index T = all.rows();
  const int d = params.atoms;
  if (2 * d > T) throw Error(ErrorCode::kInvalidConfig, "atoms per dictionary must not exceed T/2");

  const std::size_t total = words.size();
  const Eigen::VectorXd norms = all.colwise().norm().transpose();
  Rng rng(params.seed, 0x7261696e);  // "rain"

  std::vector<Eigen::Index> remaining(total);
  std::iota(remaining.begin(), remaining.end(), Eigen::Index{0});

  TrainResult result;
  result.group.lambda = params.lambda;
  const auto target = static_cast<std::size_t>(std::ceil(params.coverage * static_cast<double>(total)));

  while (static_cast<int>(result.group.dictionaries.size()) < params.max_dictionaries &&
         total - remaining.size() < target && !remaining.empty()) {
    const Eigen::MatrixXd X = gather(words, remaining);
    const Eigen::Index M = X.cols();

    std::vector<Eigen::Index> informative;  // local indices of words with norm >= lambda
    for (Eigen::Index k = 0; k < M; ++k) {
      if (norms[remaining[static_cast<std::size_t>(k)]] >= params.lambda) informative.push_back(k);
    }

    std::optional<Dictionary> accepted;
    std::vector<char> covered_mask;
    for (int attempt = 0; attempt < params.init_attempts && !accepted; ++attempt) {
      // Seed atoms: the leading left singular vectors of a random
      // informative word's neighborhood (largest |cosine|), so the start
      // already lies near one cluster. Noise fills in without informative words.
      Eigen::MatrixXd D(T, d);
      if (!informative.empty()) {
        const Eigen::Index seed_word = informative[static_cast<std::size_t>(rng.below(informative.size()))];
        const Eigen::VectorXd anchor = X.col(seed_word) / norms[remaining[static_cast<std::size_t>(seed_word)]];
        std::vector<Eigen::Index> order = informative;
        const std::size_t take = neighborhood_size(order.size(), d, params.trim_fraction);
        auto closeness = [&](Eigen::Index k) {
          return std::fabs(anchor.dot(X.col(k))) / norms[remaining[static_cast<std::size_t>(k)]];
        };
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take - 1), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) {
                           const double ca = closeness(a), cb = closeness(b);
                           return ca != cb ? ca > cb : a < b;
                         });
        Eigen::MatrixXd local(T, static_cast<Eigen::Index>(take));
        for (std::size_t q = 0; q < take; ++q) local.col(static_cast<Eigen::Index>(q)) = X.col(order[q]);
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(local, Eigen::ComputeFullU);
        D = svd.matrixU().leftCols(d);
      } else {
        for (Eigen::Index t = 0; t < T; ++t) {
          for (int c = 0; c < d; ++c) D(t, c) = rng.normal();
        }
      }
      normalize_columns(D);

      Eigen::VectorXd errors;
      for (int epoch = 0;; ++epoch) {
        const Dictionary current(0, D);
        const Eigen::MatrixXd B = current.code_all(X);
        errors = (X - D * B).colwise().norm().transpose();
        if (epoch == params.epochs) break;

        // Fit set: everything already within lambda plus the nearest share
        // (by relative residual) of the informative words.
        std::vector<char> fit(static_cast<std::size_t>(M), 0);
        for (Eigen::Index k = 0; k < M; ++k) fit[static_cast<std::size_t>(k)] = errors[k] <= params.lambda;
        if (!informative.empty()) {
          std::vector<Eigen::Index> order = informative;
          const std::size_t nearest = neighborhood_size(order.size(), d, params.trim_fraction);
          auto relative = [&](Eigen::Index k) { return errors[k] / norms[remaining[static_cast<std::size_t>(k)]]; };
          std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nearest - 1), order.end(),
                           [&](Eigen::Index a, Eigen::Index b) {
                             const double ra = relative(a), rb = relative(b);
                             return ra != rb ? ra < rb : a < b;
                           });
          for (std::size_t q = 0; q < nearest; ++q) fit[static_cast<std::size_t>(order[q])] = 1;
        }
        std::vector<Eigen::Index> fit_idx;
        for (Eigen::Index k = 0; k < M; ++k) {
          if (fit[static_cast<std::size_t>(k)]) fit_idx.push_back(k);
        }
        Eigen::MatrixXd Xf(T, static_cast<Eigen::Index>(fit_idx.size()));
        Eigen::MatrixXd Bf(d, static_cast<Eigen::Index>(fit_idx.size()));
        for (std::size_t q = 0; q < fit_idx.size(); ++q) {
          Xf.col(static_cast<Eigen::Index>(q)) = X.col(fit_idx[q]);
          Bf.col(static_cast<Eigen::Index>(q)) = B.col(fit_idx[q]);
        }
        bcd_sweep(D, Xf, Bf);
      }

      covered_mask.assign(static_cast<std::size_t>(M), 0);
      bool covers_informative = false;
      std::size_t covered = 0;
      for (Eigen::Index k = 0; k < M; ++k) {
        if (errors[k] <= params.lambda) {
          covered_mask[static_cast<std::size_t>(k)] = 1;
          ++covered;
          if (norms[remaining[static_cast<std::size_t>(k)]] >= params.lambda) covers_informative = true;
        }
      }
      if (covers_informative || (informative.empty() && covered > 0)) {
        accepted.emplace(static_cast<int>(result.group.dictionaries.size()), D);
      }
    }
    if (!accepted) break;

    result.group.dictionaries.push_back(std::move(*accepted));
    std::vector<Eigen::Index> still;
    still.reserve(remaining.size());
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      if (!covered_mask[k]) still.push_back(remaining[k]);
    }
    remaining.swap(still);
  }

  if (result.group.dictionaries.empty()) {
    throw Error(ErrorCode::kInsufficientWords, "no dictionary could cover any training word");
  }
  result.uncovered = remaining.size();
  result.coverage_failure = total - remaining.size() < target;
  return result;
}

// ---------------------------------------------------------------------------
// Local updating

double pool_loss(const Dictionary& dictionary, std::span<const VisualWord> words) {
  if (words.empty()) return 0.0;
  const Eigen::MatrixXd X = stack(words);
  const Eigen::MatrixXd B = dictionary.code_all(X);
  return (X - dictionary.atoms() * B).squaredNorm();
}

Dictionary gradient_update(const Dictionary& dictionary, std::span<const VisualWord> words, double delta, int passes) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidConfig, "step size must be positive");
  if (words.empty()) return dictionary;
  const Eigen::MatrixXd X = stack(words);
  Dictionary current = dictionary;
  for (int pass = 0; pass < passes; ++pass) {
    const Eigen::MatrixXd& D = current.atoms();
    const Eigen::MatrixXd B = current.code_all(X);
    const Eigen::MatrixXd residual = X - D * B;
    const double before = residual.squaredNorm();
    const Eigen::MatrixXd grad = -2.0 * residual * B.transpose();
    if (grad.squaredNorm() == 0.0) break;

    double step = delta;
    bool improved = false;
    for (int h = 0; h <= kMaxStepHalvings && !improved; ++h, step *= 0.5) {
      Eigen::MatrixXd next = D - step * grad;
      bool finite_columns = true;
      for (Eigen::Index j = 0; j < next.cols(); ++j) finite_columns = finite_columns && next.col(j).norm() > 1e-12;
      if (!finite_columns) continue;
      Dictionary candidate(current.id(), std::move(next));
      const Eigen::MatrixXd Bc = candidate.code_all(X);
      if ((X - candidate.atoms() * Bc).squaredNorm() <= before) {
        current = std::move(candidate);
        improved = true;
      }
    }
    if (!improved) break;
  }
  return current;
}

WordPool::WordPool(int dictionary_id, std::size_t capacity) : dictionary_id_(dictionary_id), capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidConfig, "pool capacity must be positive");
}

PoolState WordPool::deposit(VisualWord word, int token) {
  if (token != dictionary_id_) {
    throw Error(ErrorCode::kTokenMismatch, "word tagged for dictionary " + std::to_string(token) +
                                               " deposited into pool " + std::to_string(dictionary_id_));
  }
  words_.push_back(std::move(word));
  return {words_.size(), ready()};
}

std::vector<VisualWord> WordPool::drain() {
  std::vector<VisualWord> out;
  out.swap(words_);
  return out;
}

Dictionary local_update(const Dictionary& dictionary, WordPool& pool, double delta, int passes) {
  if (!pool.ready()) {
    throw Error(ErrorCode::kPoolNotReady, "pool " + std::to_string(pool.dictionary_id()) + " holds " +
                                              std::to_string(pool.size()) + " of " +
                                              std::to_string(pool.capacity()) + " words");
  }
  if (pool.dictionary_id() != dictionary.id()) {
    throw Error(ErrorCode::kTokenMismatch, "pool belongs to another dictionary");
  }
  const std::vector<VisualWord> words = pool.drain();
  return gradient_update(dictionary, words, delta, passes);
}

// ---------------------------------------------------------------------------
// Global updating

std::optional<GroupDictionary> global_update(const GroupDictionary& group, std::vector<WordPool>& pools,
                                             const TrainParams& params, const VisualWord* trigger,
                                             std::size_t min_words) {
  std::size_t available = trigger ? 1 : 0;
  for (const auto& pool : pools) available += pool.size();
  if (available < std::max<std::size_t>(static_cast<std::size_t>(params.atoms), min_words)) return std::nullopt;

  std::vector<VisualWord> words;
  words.reserve(available);
  for (const auto& pool : pools) words.insert(words.end(), pool.words().begin(), pool.words().end());
  if (trigger) words.push_back(*trigger);

  TrainParams retrain = params;
  retrain.lambda = group.lambda;
  TrainResult trained = train_group(words, retrain);
  for (auto& pool : pools) pool.drain();
  return std::move(trained.group);
}

// ---------------------------------------------------------------------------
// Snapshot store

GroupStore::GroupStore(GroupDictionary initial)
    : current_(std::make_shared<const GroupDictionary>(std::move(initial))) {}

std::shared_ptr<const GroupDictionary> GroupStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

std::uint64_t GroupStore::version() const {
  std::lock_guard lock(mutex_);
  return version_;
}

void GroupStore::install(GroupDictionary next) {
  auto fresh = std::make_shared<const GroupDictionary>(std::move(next));
  std::lock_guard lock(mutex_);
  current_ = std::move(fresh);
  ++version_;
}

void GroupStore::replace_dictionary(Dictionary updated) {
  std::shared_ptr<const GroupDictionary> base = snapshot();
  GroupDictionary next = *base;
  const int id = updated.id();
  if (id < 0 || id >= next.size()) throw Error(ErrorCode::kIndexOutOfRange, "no dictionary with that id");
  next.dictionaries[static_cast<std::size_t>(id)] = std::move(updated);
  install(std::move(next));
}

}  // namespace crowdflux

#include "mdpp/markov.hpp"

#include <algorithm>
#include <string>

#include "mdpp/error.hpp"
#include "mdpp/sampler.hpp"

namespace mdpp {

namespace {

void check_transition_sets(const Kernel &l, const Subset &previous, const Subset &next) {
  if (previous.ground_size() != l.size() || next.ground_size() != l.size()) {
    fail(ErrorKind::InvalidArgument, "transition sets do not match the kernel's ground set");
  }
  if (previous.intersects(next)) {
    fail(ErrorKind::InvalidArgument, "consecutive chain sets must be disjoint");
  }
}

/// Position of each item of `next` within the sorted complement `rest`.
Subset localize(const Subset &next, const Subset &rest) {
  std::vector<std::size_t> local;
  local.reserve(next.size());
  const auto ground = rest.indices();
  for (std::size_t item : next) {
    const auto it = std::lower_bound(ground.begin(), ground.end(), item);
    local.push_back(static_cast<std::size_t>(it - ground.begin()));
  }
  return Subset(ground.size(), std::move(local));
}

}  // namespace

ChainState::ChainState(ChainVariant variant, std::size_t k, Kernel base, Kernel transition_base,
                       Subset previous)
    : variant_(variant),
      k_(k),
      base_(std::move(base)),
      transition_base_(std::move(transition_base)),
      previous_(std::move(previous)) {}

void ChainState::advance(Subset next) {
  if (next.ground_size() != base_.size()) {
    fail(ErrorKind::InvalidArgument, "chain set does not match the ground set");
  }
  if (next.intersects(previous_)) {
    fail(ErrorKind::InvalidArgument, "consecutive chain sets must be disjoint");
  }
  previous_ = std::move(next);
  ++t_;
}

Subset random_half(const Subset &set, std::size_t k, RandomSource &rng) {
  if (k > set.size()) fail(ErrorKind::InvalidArgument, "random_half: k exceeds set size");
  std::vector<std::size_t> items(set.begin(), set.end());
  // partial Fisher-Yates
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return Subset(set.ground_size(), std::move(items));
}

std::pair<ChainState, Subset> mdpp_init(const Kernel &l, RandomSource &rng) {
  Kernel m = markov_base(l);
  Subset first = sample_dpp(l, rng);
  ChainState state(ChainVariant::MDPP, 0, l, std::move(m), first);
  return {std::move(state), std::move(first)};
}

std::pair<ChainState, Subset> mkdpp_init(const Kernel &l, std::size_t k, RandomSource &rng) {
  if (k == 0) fail(ErrorKind::InvalidArgument, "Markov k-DPP needs k >= 1");
  if (l.form() != KernelForm::Ensemble) {
    fail(ErrorKind::InvalidArgument, "Markov k-DPP needs an L-ensemble kernel");
  }
  const std::size_t rank = l.rank();
  if (2 * k > rank) {
    fail(ErrorKind::InfeasibleCardinality,
         "Markov k-DPP with k = " + std::to_string(k) + " needs rank >= " +
             std::to_string(2 * k) + ", kernel rank is " + std::to_string(rank));
  }
  const Subset pair_union = sample_kdpp(l, 2 * k, rng);
  Subset first = random_half(pair_union, k, rng);
  ChainState state(ChainVariant::MkDPP, k, l, l, first);
  return {std::move(state), std::move(first)};
}

Subset sample_mdpp_transition(const Kernel &m, const Subset &previous, RandomSource &rng) {
  if (previous.ground_size() != m.size()) {
    fail(ErrorKind::InvalidArgument, "previous set does not match the kernel's ground set");
  }
  const Subset rest = previous.complement();
  const Kernel conditional = conditional_ensemble(m, previous);
  const Subset local = sample_dpp(conditional, rng);
  return Subset::lift(local, rest.indices(), m.size());
}

Subset sample_mkdpp_transition(const Kernel &l, const Subset &previous, std::size_t k,
                               RandomSource &rng) {
  if (previous.ground_size() != l.size()) {
    fail(ErrorKind::InvalidArgument, "previous set does not match the kernel's ground set");
  }
  const Subset rest = previous.complement();
  if (rest.size() < k) {
    fail(ErrorKind::InfeasibleCardinality, "only " + std::to_string(rest.size()) +
                                               " items remain outside the previous set");
  }
  const Kernel conditional = conditional_ensemble(l, previous);
  const std::size_t rank = conditional.rank();
  if (rank < k) {
    fail(ErrorKind::InfeasibleCardinality, "conditional kernel rank " + std::to_string(rank) +
                                               " is below k = " + std::to_string(k));
  }
  const Subset local = sample_kdpp(conditional, k, rng);
  return Subset::lift(local, rest.indices(), l.size());
}

Subset mdpp_step(ChainState &state, RandomSource &rng) {
  if (state.variant() != ChainVariant::MDPP) {
    fail(ErrorKind::InvalidArgument, "mdpp_step on a Markov k-DPP state");
  }
  Subset next = sample_mdpp_transition(state.transition_base(), state.previous(), rng);
  state.advance(next);
  return next;
}

Subset mkdpp_step(ChainState &state, RandomSource &rng) {
  if (state.variant() != ChainVariant::MkDPP) {
    fail(ErrorKind::InvalidArgument, "mkdpp_step on a Markov DPP state");
  }
  Subset next = sample_mkdpp_transition(state.transition_base(), state.previous(), state.k(), rng);
  state.advance(next);
  return next;
}

double mdpp_transition_logprob(const Kernel &l, const Subset &previous, const Subset &next) {
  check_transition_sets(l, previous, next);
  const Kernel m = markov_base(l);
  const Subset joint = previous.union_with(next);
  Matrix shifted = m.entries();
  for (std::size_t i : previous.complement()) shifted(i, i) += 1.0;
  return log_det_psd(principal_submatrix(m.entries(), joint.indices())) - log_det_psd(shifted);
}

double mkdpp_transition_logprob(const Kernel &l, const Subset &previous, const Subset &next,
                                std::size_t k) {
  check_transition_sets(l, previous, next);
  if (next.size() != k) {
    fail(ErrorKind::InvalidArgument, "Markov k-DPP transition to a set of size " +
                                         std::to_string(next.size()) + " with k = " +
                                         std::to_string(k));
  }
  const Subset rest = previous.complement();
  const Kernel conditional = conditional_ensemble(l, previous);
  return log_prob_kdpp(conditional, localize(next, rest), k);
}

std::vector<Subset> run_chain(ChainState &state, std::size_t steps, const RandomSource &rng) {
  if (steps == 0) fail(ErrorKind::InvalidArgument, "run_chain needs T >= 1");
  std::vector<Subset> trajectory;
  trajectory.reserve(steps);
  trajectory.push_back(state.previous());
  while (trajectory.size() < steps) {
    RandomSource step_rng = rng.substream(state.t() + 1);
    trajectory.push_back(state.variant() == ChainVariant::MDPP ? mdpp_step(state, step_rng)
                                                                : mkdpp_step(state, step_rng));
  }
  return trajectory;
}

std::vector<Subset> sample_chain(const Kernel &l, ChainVariant variant, std::size_t k,
                                 std::size_t steps, const RandomSource &rng) {
  RandomSource init_rng = rng.substream(1);
  auto [state, first] =
      variant == ChainVariant::MDPP ? mdpp_init(l, init_rng) : mkdpp_init(l, k, init_rng);
  return run_chain(state, steps, rng);
}

}  // namespace mdpp

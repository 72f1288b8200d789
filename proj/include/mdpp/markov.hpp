#ifndef MDPP_MARKOV_HPP
#define MDPP_MARKOV_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "mdpp/kernel.hpp"
#include "mdpp/random.hpp"

namespace mdpp {

enum class ChainVariant { MDPP, MkDPP };

/// State of a Markov DPP or Markov k-DPP chain after step t.
///
/// For MDPP the transition base is M = L (I - L)^-1 and consecutive sets are
/// drawn from the conditional DPP of M given the previous set. For MkDPP the
/// transition base is L itself and each step is a conditional k-DPP.
class ChainState {
public:
  ChainVariant variant() const { return variant_; }
  std::size_t k() const { return k_; }
  const Kernel &base() const { return base_; }
  const Kernel &transition_base() const { return transition_base_; }
  const Subset &previous() const { return previous_; }
  std::size_t t() const { return t_; }

  /// Replaces the previous set, e.g. to resume a chain from a logged state.
  void advance(Subset next);

private:
  ChainState(ChainVariant variant, std::size_t k, Kernel base, Kernel transition_base,
             Subset previous);

  friend std::pair<ChainState, Subset> mdpp_init(const Kernel &, RandomSource &);
  friend std::pair<ChainState, Subset> mkdpp_init(const Kernel &, std::size_t, RandomSource &);

  ChainVariant variant_;
  std::size_t k_;
  Kernel base_;
  Kernel transition_base_;
  Subset previous_;
  std::size_t t_ = 1;
};

/// Y_1 ~ DPP(L). Throws ChainUndefined unless lambda_max(L) < 1 - 1e-10.
std::pair<ChainState, Subset> mdpp_init(const Kernel &l, RandomSource &rng);

/// Y_t from the DPP with kernel conditional_ensemble(M, Y_{t-1}).
Subset mdpp_step(ChainState &state, RandomSource &rng);

/// Z_1 ~ 2k-DPP(L), Y_1 a uniformly random size-k half of Z_1.
std::pair<ChainState, Subset> mkdpp_init(const Kernel &l, std::size_t k, RandomSource &rng);

/// Y_t from the k-DPP with kernel conditional_ensemble(L, Y_{t-1}).
Subset mkdpp_step(ChainState &state, RandomSource &rng);

/// Stateless transitions, used by the learning loop where L changes every
/// step. `m` is the Markov base (MDPP), `l` the ensemble (MkDPP).
Subset sample_mdpp_transition(const Kernel &m, const Subset &previous, RandomSource &rng);
Subset sample_mkdpp_transition(const Kernel &l, const Subset &previous, std::size_t k,
                               RandomSource &rng);

/// Uniformly random size-k subset of `set`.
Subset random_half(const Subset &set, std::size_t k, RandomSource &rng);

/// log det(M_{prev ∪ next}) - log det(M + I_{Y\prev}) with M = markov_base(l).
double mdpp_transition_logprob(const Kernel &l, const Subset &previous, const Subset &next);

/// log of det(L_{prev ∪ next}) / sum_{|A|=k, A∩prev=∅} det(L_{prev ∪ A}),
/// evaluated as a k-DPP probability under conditional_ensemble(l, prev).
double mkdpp_transition_logprob(const Kernel &l, const Subset &previous, const Subset &next,
                                std::size_t k);

/// Trajectory of length T starting with state.previous(). Step t draws from
/// rng.substream(t), so a step is reproducible from (seed, t) alone.
std::vector<Subset> run_chain(ChainState &state, std::size_t steps, const RandomSource &rng);

/// Initializes from rng.substream(1) and runs `steps` sets in total.
std::vector<Subset> sample_chain(const Kernel &l, ChainVariant variant, std::size_t k,
                                 std::size_t steps, const RandomSource &rng);

}  // namespace mdpp

#endif  // MDPP_MARKOV_HPP

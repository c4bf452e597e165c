#pragma once

// Reference implementations written independently of the library code.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rhea/core.hpp"

namespace oracle {

/// Max cosine over all row pairs, straight double loop in long double.
inline double max_cosine(const rhea::LatentMatrix& q, const rhea::LatentMatrix& k) {
  long double best = -2.0L;
  for (std::size_t i = 0; i < q.n(); ++i) {
    for (std::size_t j = 0; j < k.n(); ++j) {
      long double dot = 0, nq = 0, nk = 0;
      for (std::size_t c = 0; c < q.d(); ++c) {
        const long double a = q.row(i)[c];
        const long double b = k.row(j)[c];
        dot += a * b;
        nq += a * a;
        nk += b * b;
      }
      const long double cos = (nq == 0 || nk == 0) ? 0.0L : dot / (std::sqrt(nq) * std::sqrt(nk));
      if (cos > best) best = cos;
    }
  }
  return static_cast<double>(best);
}

inline rhea::LatentMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::vector<float> data(n * d);
  for (auto& x : data) x = static_cast<float>(static_cast<double>(rng() % 2000001) / 1000000.0 - 1.0);
  return rhea::LatentMatrix(n, d, std::move(data));
}

/// Last turn at which the Vanilla context still shows the instruction to a
/// newest-first reader with prefix budget P. Turn 1 holds the instruction
/// (`instr_tokens` long, directive fully inside), later user turns are
/// `turn_tokens` long and every reply is `reply_tokens` long. Returns the
/// first turn where obedience is lost.
inline std::size_t vanilla_cutoff(std::size_t instr_tokens, std::size_t turn_tokens, std::size_t reply_tokens,
                                  std::size_t budget) {
  for (std::size_t t = 2;; ++t) {
    // query + (t - 2) full exchanges + turn-1 reply + the instruction itself
    const std::size_t end = turn_tokens + (t - 2) * (turn_tokens + reply_tokens) + reply_tokens + instr_tokens;
    if (end > budget) return t;
  }
}

}  // namespace oracle

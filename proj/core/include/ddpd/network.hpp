#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ddpd/dual.hpp"
#include "ddpd/errors.hpp"
#include "ddpd/tape.hpp"

namespace ddpd {

enum class Activation : uint8_t { silu, softplus };

// Fully connected network description. `widths` is the complete layer chain
// (input, hidden..., output). A non-empty `monotonicity` vector (one entry per
// input, values in {-1, 0, +1}) turns the network into a constrained monotonic
// network: first-layer weights are sign-locked per input, every later weight
// is passed through |.|, and the hidden activation must be convex
// (softplus). Hidden-layer indicators are implicitly +1.
struct MlpSpec {
  std::vector<int> widths;
  Activation activation = Activation::silu;
  std::vector<int> monotonicity;

  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }
  bool constrained() const { return !monotonicity.empty(); }
};

std::size_t param_count(const MlpSpec& spec);

// Network with its flat parameter block (per layer: row-major weights
// [out x in], then biases).
struct Mlp {
  MlpSpec spec;
  std::vector<double> params;
};

Mlp make_mlp(std::vector<int> widths, Activation act = Activation::silu);
Mlp make_cmnn(std::vector<int> widths, std::vector<int> monotonicity);

// weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0. `zero_output`
// clears the last layer so the network starts as the zero function.
void init_params(Mlp& net, uint64_t seed, bool zero_output = false);

template <class T>
inline T apply_activation(Activation act, const T& z) {
  return act == Activation::silu ? silu(z) : softplus(z);
}

// Evaluates the network on inputs of scalar type R with parameters of scalar
// type P (use P=Var bound to a tape for training, P=double for inference;
// R may carry forward-mode duals on top of P for input derivatives).
template <class R, class P>
void mlp_apply(const MlpSpec& spec, const P* params, std::span<const R> x,
               std::vector<R>& out) {
  if (static_cast<int>(x.size()) != spec.input_width())
    throw ShapeMismatch("mlp_apply: input width " + std::to_string(x.size()) +
                        " != " + std::to_string(spec.input_width()));
  const int n_layers = static_cast<int>(spec.widths.size()) - 1;
  std::vector<R> cur(x.begin(), x.end());
  std::vector<R> next;
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int n_in = spec.widths[l];
    const int n_out = spec.widths[l + 1];
    next.clear();
    next.reserve(n_out);
    const bool last = (l == n_layers - 1);
    for (int o = 0; o < n_out; ++o) {
      const P* wrow = params + off + static_cast<std::size_t>(o) * n_in;
      R z = [&] {
        if (!spec.constrained()) return wrow[0] * cur[0];
        const int t = l == 0 ? spec.monotonicity[0] : 1;
        if (t > 0) return abs(wrow[0]) * cur[0];
        if (t < 0) return -abs(wrow[0]) * cur[0];
        return wrow[0] * cur[0];
      }();
      for (int i = 1; i < n_in; ++i) {
        if (!spec.constrained()) {
          z = z + wrow[i] * cur[i];
        } else {
          const int t = l == 0 ? spec.monotonicity[i] : 1;
          if (t > 0)
            z = z + abs(wrow[i]) * cur[i];
          else if (t < 0)
            z = z - abs(wrow[i]) * cur[i];
          else
            z = z + wrow[i] * cur[i];
        }
      }
      z = z + params[off + static_cast<std::size_t>(n_out) * n_in + o];
      next.push_back(last ? z : apply_activation(spec.activation, z));
    }
    off += static_cast<std::size_t>(n_out) * n_in + n_out;
    cur.swap(next);
  }
  out = std::move(cur);
}

template <class R, class P>
R mlp_apply_scalar(const MlpSpec& spec, const P* params,
                   std::span<const R> x) {
  if (spec.output_width() != 1)
    throw ShapeMismatch("mlp_apply_scalar: network output is not scalar");
  std::vector<R> out;
  mlp_apply(spec, params, x, out);
  return out[0];
}

// Applies the monotonicity sign transform to a constrained network's flat
// parameters. Evaluating the result against unconstrained(spec) reproduces
// the constrained network while paying for the |.| nodes once instead of per
// evaluation.
inline MlpSpec unconstrained(const MlpSpec& spec) {
  MlpSpec s = spec;
  s.monotonicity.clear();
  return s;
}

template <class S>
std::vector<S> baked_params(const MlpSpec& spec, const S* params) {
  std::vector<S> out;
  const int n_layers = static_cast<int>(spec.widths.size()) - 1;
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int n_in = spec.widths[l];
    const int n_out = spec.widths[l + 1];
    for (int o = 0; o < n_out; ++o)
      for (int i = 0; i < n_in; ++i) {
        const S& w = params[off + static_cast<std::size_t>(o) * n_in + i];
        const int t = l == 0 ? spec.monotonicity[i] : 1;
        if (t > 0)
          out.push_back(abs(w));
        else if (t < 0)
          out.push_back(-abs(w));
        else
          out.push_back(w);
      }
    off += static_cast<std::size_t>(n_out) * n_in;
    for (int o = 0; o < n_out; ++o) out.push_back(params[off + o]);
    off += n_out;
  }
  return out;
}

// Inference-side conveniences on double parameters.
std::vector<double> mlp_eval(const Mlp& net, std::span<const double> x);
double mlp_eval_scalar(const Mlp& net, std::span<const double> x);
std::vector<double> grad_input(const Mlp& net, std::span<const double> x);
// Hessian of a scalar-output network, row-major n x n.
std::vector<double> hess_input(const Mlp& net, std::span<const double> x);

}  // namespace ddpd

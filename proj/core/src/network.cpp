#include "ddpd/network.hpp"

#include <cmath>

#include "ddpd/rng.hpp"

namespace ddpd {

std::size_t param_count(const MlpSpec& spec) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l)
    n += static_cast<std::size_t>(spec.widths[l + 1]) * spec.widths[l] +
         spec.widths[l + 1];
  return n;
}

Mlp make_mlp(std::vector<int> widths, Activation act) {
  Mlp net;
  net.spec.widths = std::move(widths);
  net.spec.activation = act;
  net.params.assign(param_count(net.spec), 0.0);
  return net;
}

Mlp make_cmnn(std::vector<int> widths, std::vector<int> monotonicity) {
  Mlp net;
  if (static_cast<int>(monotonicity.size()) != widths.front())
    throw ShapeMismatch("make_cmnn: one monotonicity indicator per input");
  net.spec.widths = std::move(widths);
  net.spec.activation = Activation::softplus;
  net.spec.monotonicity = std::move(monotonicity);
  net.params.assign(param_count(net.spec), 0.0);
  return net;
}

void init_params(Mlp& net, uint64_t seed, bool zero_output) {
  CounterRng rng(seed, 0x6e657477 /* "netw" */, 0, 0);
  const auto& w = net.spec.widths;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(w[l]));
    const bool last = (l + 2 == w.size());
    for (int o = 0; o < w[l + 1]; ++o)
      for (int i = 0; i < w[l]; ++i)
        net.params[off++] =
            (last && zero_output) ? 0.0 : (2.0 * rng.u01() - 1.0) * scale;
    for (int o = 0; o < w[l + 1]; ++o) net.params[off++] = 0.0;
  }
}

std::vector<double> mlp_eval(const Mlp& net, std::span<const double> x) {
  std::vector<double> out;
  mlp_apply(net.spec, net.params.data(), x, out);
  return out;
}

double mlp_eval_scalar(const Mlp& net, std::span<const double> x) {
  return mlp_apply_scalar(net.spec, net.params.data(), x);
}

std::vector<double> grad_input(const Mlp& net, std::span<const double> x) {
  if (net.spec.output_width() != 1)
    throw ShapeMismatch("grad_input: network output is not scalar");
  const int n = static_cast<int>(x.size());
  std::vector<double> g(n);
  std::vector<Dual<double>> xd(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) xd[i] = {x[i], i == k ? 1.0 : 0.0};
    g[k] = mlp_apply_scalar(net.spec, net.params.data(),
                            std::span<const Dual<double>>(xd))
               .d;
  }
  return g;
}

std::vector<double> hess_input(const Mlp& net, std::span<const double> x) {
  if (net.spec.output_width() != 1)
    throw ShapeMismatch("hess_input: network output is not scalar");
  const int n = static_cast<int>(x.size());
  std::vector<double> h(static_cast<std::size_t>(n) * n);
  std::vector<Dual<Dual<double>>> xd(n);
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      for (int i = 0; i < n; ++i)
        xd[i] = {{x[i], i == k ? 1.0 : 0.0}, {i == l ? 1.0 : 0.0, 0.0}};
      const double hkl =
          mlp_apply_scalar(net.spec, net.params.data(),
                           std::span<const Dual<Dual<double>>>(xd))
              .d.d;
      h[static_cast<std::size_t>(k) * n + l] = hkl;
      h[static_cast<std::size_t>(l) * n + k] = hkl;
    }
  }
  return h;
}

}  // namespace ddpd

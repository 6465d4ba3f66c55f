#include "ddpd/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ddpd {

using nlohmann::json;

ModelParams make_model(int dim, bool solid, double h, int hidden) {
  ModelParams m;
  m.dim = dim;
  m.solid = solid;
  m.h = h;
  m.volume = make_mlp({1, hidden, hidden, 1});
  m.energy_vol = make_cmnn({2, hidden, hidden, 1}, {1, -1});
  m.coeff_a = make_mlp({2, hidden, hidden, 1});
  m.coeff_b = make_mlp({2, hidden, hidden, 1});
  m.coeff_c = make_mlp({2, hidden, hidden, 1});
  m.teacher = make_mlp({1 + dim, hidden, hidden, 1});
  if (solid) {
    // Entropy plus the D-1 nonzero invariants of the traceless strain.
    std::vector<int> mono(dim, 0);
    mono[0] = 1;
    m.energy_dev = make_cmnn({dim, hidden, hidden, 1}, mono);
    m.strain = make_mlp({2 * dim, hidden, hidden, dim * (dim + 1) / 2});
  }
  return m;
}

void randomize_model(ModelParams& model, uint64_t seed) {
  init_params(model.volume, seed ^ 0x01, /*zero_output=*/true);
  init_params(model.energy_vol, seed ^ 0x02);
  init_params(model.coeff_a, seed ^ 0x03);
  init_params(model.coeff_b, seed ^ 0x04);
  init_params(model.coeff_c, seed ^ 0x05);
  init_params(model.teacher, seed ^ 0x06);
  if (model.solid) {
    init_params(model.energy_dev, seed ^ 0x07);
    init_params(model.strain, seed ^ 0x08);
  }
}

namespace {

template <class F>
void for_each_net(const ModelParams& m, F&& f) {
  f(m.volume);
  f(m.energy_vol);
  if (m.solid) f(m.energy_dev);
  f(m.coeff_a);
  f(m.coeff_b);
  f(m.coeff_c);
  f(m.teacher);
  if (m.solid) f(m.strain);
}

template <class F>
void for_each_net(ModelParams& m, F&& f) {
  f(m.volume);
  f(m.energy_vol);
  if (m.solid) f(m.energy_dev);
  f(m.coeff_a);
  f(m.coeff_b);
  f(m.coeff_c);
  f(m.teacher);
  if (m.solid) f(m.strain);
}

}  // namespace

std::size_t param_count(const ModelParams& model) {
  std::size_t n = 2;  // log_kb, log_m
  for_each_net(model, [&](const Mlp& net) { n += net.params.size(); });
  return n;
}

std::vector<double> flatten(const ModelParams& model) {
  std::vector<double> theta;
  theta.reserve(param_count(model));
  for_each_net(model, [&](const Mlp& net) {
    theta.insert(theta.end(), net.params.begin(), net.params.end());
  });
  theta.push_back(model.log_kb);
  theta.push_back(model.log_m);
  return theta;
}

void unflatten(ModelParams& model, std::span<const double> theta) {
  if (theta.size() != param_count(model))
    throw ShapeMismatch("unflatten: expected " +
                        std::to_string(param_count(model)) + " parameters, got " +
                        std::to_string(theta.size()));
  std::size_t off = 0;
  for_each_net(model, [&](Mlp& net) {
    std::copy(theta.begin() + off, theta.begin() + off + net.params.size(),
              net.params.begin());
    off += net.params.size();
  });
  model.log_kb = theta[off++];
  model.log_m = theta[off++];
}

std::vector<double> grad_params(Tape& tape, const BoundModel<Var>& bound,
                                Var loss) {
  tape.backward(loss.idx);
  const std::size_t n = param_count(*bound.src);
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k)
    g[k] = tape.adjoint(bound.leaf_start + static_cast<int32_t>(k));
  return g;
}

namespace {

json net_to_json(const Mlp& net) {
  json j;
  j["widths"] = net.spec.widths;
  j["activation"] =
      net.spec.activation == Activation::silu ? "silu" : "softplus";
  j["monotonicity"] = net.spec.monotonicity;
  j["params"] = net.params;
  return j;
}

Mlp net_from_json(const json& j) {
  Mlp net;
  net.spec.widths = j.at("widths").get<std::vector<int>>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "silu")
    net.spec.activation = Activation::silu;
  else if (act == "softplus")
    net.spec.activation = Activation::softplus;
  else
    throw ParseError("unknown activation '" + act + "'");
  net.spec.monotonicity = j.at("monotonicity").get<std::vector<int>>();
  net.params = j.at("params").get<std::vector<double>>();
  if (net.params.size() != param_count(net.spec))
    throw ParseError("parameter count does not match widths");
  return net;
}

}  // namespace

std::string model_to_json(const ModelParams& model) {
  json j;
  j["format_version"] = "1";
  j["dimension"] = model.dim;
  j["solid"] = model.solid;
  j["h"] = model.h;
  j["log_kb"] = model.log_kb;
  j["log_m"] = model.log_m;
  json nets;
  nets["volume"] = net_to_json(model.volume);
  nets["energy_vol"] = net_to_json(model.energy_vol);
  nets["coeff_a"] = net_to_json(model.coeff_a);
  nets["coeff_b"] = net_to_json(model.coeff_b);
  nets["coeff_c"] = net_to_json(model.coeff_c);
  nets["teacher"] = net_to_json(model.teacher);
  if (model.solid) {
    nets["energy_dev"] = net_to_json(model.energy_dev);
    nets["strain"] = net_to_json(model.strain);
  }
  j["networks"] = nets;
  return j.dump(2);
}

ModelParams model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model checkpoint: ") + e.what());
  }
  if (j.at("format_version").get<std::string>() != "1")
    throw ParseError("unsupported checkpoint format version");
  ModelParams m;
  m.dim = j.at("dimension").get<int>();
  m.solid = j.at("solid").get<bool>();
  m.h = j.at("h").get<double>();
  m.log_kb = j.at("log_kb").get<double>();
  m.log_m = j.at("log_m").get<double>();
  const json& nets = j.at("networks");
  m.volume = net_from_json(nets.at("volume"));
  m.energy_vol = net_from_json(nets.at("energy_vol"));
  m.coeff_a = net_from_json(nets.at("coeff_a"));
  m.coeff_b = net_from_json(nets.at("coeff_b"));
  m.coeff_c = net_from_json(nets.at("coeff_c"));
  m.teacher = net_from_json(nets.at("teacher"));
  if (m.solid) {
    m.energy_dev = net_from_json(nets.at("energy_dev"));
    m.strain = net_from_json(nets.at("strain"));
  }
  return m;
}

void save_model(const ModelParams& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << model_to_json(model) << "\n";
}

ModelParams load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace ddpd

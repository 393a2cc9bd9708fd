#include "rnormlab/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace rnormlab {

double TwoLayerNet::bias_cap() const {
  double sd = std::sqrt(double(d));
  return regime == Regime::V2 ? 2.0 * sd : sd;
}

void TwoLayerNet::add_neuron(double a, Eigen::VectorXd w, double b) {
  if (w.size() != d) throw std::invalid_argument("neuron dimension mismatch");
  if (a == 0.0) return;
  double nw = w.norm();
  if (nw < 1e-14) {
    // relu(b) is a constant on all of R^d
    c += a * std::max(0.0, b);
    return;
  }
  // a relu(w.x + b) = (a|w|) relu((w/|w|).x + b/|w|)
  a *= nw;
  b /= nw;
  w /= nw;
  double cap = bias_cap();
  if (b > cap) {  // active everywhere on Omega: affine
    v += a * w;
    c += a * b;
    return;
  }
  if (b < -cap) return;  // dead on Omega
  neurons.push_back(Neuron{a, std::move(w), b});
}

double eval(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.d) throw std::invalid_argument("eval dimension mismatch");
  double s = net.v.dot(x) + net.c;
  for (const auto& nr : net.neurons) s += nr.a * std::max(0.0, nr.w.dot(x) + nr.b);
  return s;
}

Eigen::VectorXd eval_batch(const TwoLayerNet& net, const Eigen::MatrixXd& X) {
  if (X.cols() != net.d) throw std::invalid_argument("eval dimension mismatch");
  const Eigen::Index n = X.rows();
  Eigen::VectorXd y = X * net.v;
  y.array() += net.c;
  const size_t m = net.neurons.size();
  const size_t blk = 128;  // fixed block => fixed summation order
  Eigen::MatrixXd W, P;
  for (size_t j0 = 0; j0 < m; j0 += blk) {
    size_t j1 = std::min(m, j0 + blk);
    W.resize(Eigen::Index(j1 - j0), net.d);
    Eigen::VectorXd a(Eigen::Index(j1 - j0)), b(Eigen::Index(j1 - j0));
    for (size_t j = j0; j < j1; ++j) {
      W.row(Eigen::Index(j - j0)) = net.neurons[j].w.transpose();
      a[Eigen::Index(j - j0)] = net.neurons[j].a;
      b[Eigen::Index(j - j0)] = net.neurons[j].b;
    }
    P.noalias() = X * W.transpose();
    P.rowwise() += b.transpose();
    y.noalias() += P.cwiseMax(0.0) * a;
  }
  (void)n;
  return y;
}

namespace {
constexpr double kMergeTol = 1e-9;

struct Atom {
  Eigen::VectorXd w;
  double b;
  double a;
};

// canonical sign: first coordinate of (w, b) with magnitude > tol decides
bool needs_flip(const Eigen::VectorXd& w, double b) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) > 1e-12) return w[i] < 0.0;
  }
  return b < 0.0;
}

bool lex_less(const Atom& p, const Atom& q) {
  for (Eigen::Index i = 0; i < p.w.size(); ++i) {
    if (p.w[i] != q.w[i]) return p.w[i] < q.w[i];
  }
  return p.b < q.b;
}

bool same_atom(const Atom& p, const Atom& q, double sd) {
  return (p.w - q.w).norm() + std::abs(p.b - q.b) / sd <= kMergeTol;
}
}  // namespace

TwoLayerNet canonicalize(const TwoLayerNet& net) {
  TwoLayerNet out(net.d, net.regime);
  out.v = net.v;
  out.c = net.c;
  double sd = std::sqrt(double(std::max(net.d, 1)));

  std::vector<Atom> atoms;
  atoms.reserve(net.neurons.size());
  for (const auto& nr : net.neurons) {
    Atom at{nr.w, nr.b, nr.a};
    if (needs_flip(at.w, at.b)) {
      // a relu(w.x+b) = a relu(-w.x-b) + a (w.x + b)
      out.v += at.a * at.w;
      out.c += at.a * at.b;
      at.w = -at.w;
      at.b = -at.b;
    }
    atoms.push_back(std::move(at));
  }
  std::sort(atoms.begin(), atoms.end(), lex_less);
  for (size_t i = 0; i < atoms.size();) {
    Atom merged = atoms[i];
    size_t j = i + 1;
    while (j < atoms.size() && same_atom(atoms[j - 1], atoms[j], sd) &&
           same_atom(merged, atoms[j], sd)) {
      merged.a += atoms[j].a;
      ++j;
    }
    if (std::abs(merged.a) > 1e-12)
      out.neurons.push_back(Neuron{merged.a, merged.w, merged.b});
    i = j;
  }
  return out;
}

double rnorm(const TwoLayerNet& net) {
  if (net.regime != Regime::R) throw std::invalid_argument("rnorm: regime must be R");
  TwoLayerNet cn = canonicalize(net);
  double s = 0.0;
  for (const auto& nr : cn.neurons) s += std::abs(nr.a);
  return s;
}

V2Conversion v2norm_upper(const TwoLayerNet& net, double /*K*/) {
  if (net.regime != Regime::R) throw std::invalid_argument("v2norm_upper: regime must be R");
  TwoLayerNet cn = canonicalize(net);
  double sd = std::sqrt(double(net.d));
  V2Conversion res;
  res.net = TwoLayerNet(net.d, Regime::V2);
  double mass = 0.0;
  for (const auto& nr : cn.neurons) {
    res.net.neurons.push_back(nr);
    mass += std::abs(nr.a);
  }
  double nv = cn.v.norm();
  Eigen::VectorXd u = nv > 1e-14 ? Eigen::VectorXd(cn.v / nv)
                                 : Eigen::VectorXd(Eigen::VectorXd::Ones(net.d) / sd);
  // affine part as two always-active atoms: they sum to v.x + c on Omega
  double a1 = -3.0 * nv + 2.0 * cn.c / sd;
  double a2 = 4.0 * nv - 2.0 * cn.c / sd;
  if (a1 != 0.0) res.net.neurons.push_back(Neuron{a1, u, 2.0 * sd});
  if (a2 != 0.0) res.net.neurons.push_back(Neuron{a2, u, 1.5 * sd});
  mass += std::abs(a1) + std::abs(a2);
  res.mass = mass;
  return res;
}

std::string serialize(const TwoLayerNet& net) {
  nlohmann::json j;
  j["d"] = net.d;
  j["regime"] = net.regime == Regime::R ? "R" : "V2";
  j["v"] = std::vector<double>(net.v.data(), net.v.data() + net.v.size());
  j["c"] = net.c;
  auto& arr = j["neurons"] = nlohmann::json::array();
  for (const auto& nr : net.neurons) {
    nlohmann::json nj;
    nj["a"] = nr.a;
    nj["w"] = std::vector<double>(nr.w.data(), nr.w.data() + nr.w.size());
    nj["b"] = nr.b;
    arr.push_back(std::move(nj));
  }
  return j.dump();
}

TwoLayerNet deserialize(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  int d = j.at("d").get<int>();
  if (d <= 0) throw std::invalid_argument("deserialize: bad dimension");
  std::string reg = j.at("regime").get<std::string>();
  if (reg != "R" && reg != "V2") throw std::invalid_argument("deserialize: bad regime");
  TwoLayerNet net(d, reg == "R" ? Regime::R : Regime::V2);
  auto vv = j.at("v").get<std::vector<double>>();
  if ((int)vv.size() != d) throw std::invalid_argument("deserialize: v dimension mismatch");
  net.v = Eigen::Map<Eigen::VectorXd>(vv.data(), d);
  net.c = j.at("c").get<double>();
  if (net.regime == Regime::V2 && (net.v.norm() > 1e-12 || std::abs(net.c) > 1e-12))
    throw std::invalid_argument("deserialize: V2 regime must have zero affine part");
  double cap = net.bias_cap();
  for (const auto& nj : j.at("neurons")) {
    auto wv = nj.at("w").get<std::vector<double>>();
    if ((int)wv.size() != d) throw std::invalid_argument("deserialize: w dimension mismatch");
    Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(wv.data(), d);
    if (std::abs(w.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("deserialize: neuron direction not unit norm");
    double b = nj.at("b").get<double>();
    if (std::abs(b) > cap + 1e-9)
      throw std::invalid_argument("deserialize: bias outside regime range");
    net.neurons.push_back(Neuron{nj.at("a").get<double>(), std::move(w), b});
  }
  return net;
}

}  // namespace rnormlab

#include "mprk/problem.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace mprk {

std::string OdeSystem::identity() const {
  std::string id(name());
  id += " u0=(";
  for (std::size_t i = 0; i < initial_.size(); ++i) {
    if (i) id += ',';
    id += format_quad(initial_[i]);
  }
  id += ") t=[" + format_quad(t0_) + "," + format_quad(t_end_) + "]";
  return id;
}

VanDerPol::VanDerPol() : VanDerPol(StateVector<quad>{2, 0}, 0, 1) {}

VanDerPol::VanDerPol(StateVector<quad> initial, quad t0, quad t_end)
    : OdeSystemBase(initial, t0, t_end) {
  if (initial.size() != 2) throw std::invalid_argument("Van der Pol state must have dimension 2");
}

Dahlquist::Dahlquist() : Dahlquist(-1, 1, 0, 1) {}

Dahlquist::Dahlquist(quad lambda, quad y0, quad t0, quad t_end)
    : OdeSystemBase(StateVector<quad>{y0}, t0, t_end), lambda_(lambda) {}

std::string Dahlquist::identity() const {
  return OdeSystem::identity() + " lambda=" + format_quad(lambda_);
}

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, ProblemFactory, std::less<>> factories;

  Registry() {
    factories.emplace("vdp", [] { return std::make_unique<VanDerPol>(); });
    factories.emplace("dahlquist", [] { return std::make_unique<Dahlquist>(); });
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_problem(std::string key, ProblemFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories.insert_or_assign(std::move(key), std::move(factory));
}

std::vector<std::string> problem_names() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [k, _] : r.factories) names.push_back(k);
  return names;
}

std::unique_ptr<OdeSystem> make_problem(std::string_view key) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.factories.find(key);
  if (it == r.factories.end()) {
    throw std::invalid_argument("unknown problem '" + std::string(key) + "'");
  }
  return it->second();
}

}  // namespace mprk

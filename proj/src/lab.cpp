#include "romforge/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "romforge/error.hpp"
#include "romforge/rom_model.hpp"

namespace romforge::lab {

namespace fs = std::filesystem;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kPlate: return "plate";
    case ModelKind::kSpring: return "spring";
    case ModelKind::kTruss: return "truss";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "plate") return ModelKind::kPlate;
  if (s == "spring") return ModelKind::kSpring;
  if (s == "truss") return ModelKind::kTruss;
  throw UsageError("unknown model '" + s + "' (expected plate, spring or truss)");
}

std::vector<std::string> parameter_names(ModelKind k) {
  if (k == ModelKind::kSpring) return {"k", "k3"};
  return {"E", "nu", "t"};
}

fom::LoadRamp make_ramp(const LabConfig& cfg) {
  if (cfg.steps < 1) throw UsageError("steps must be >= 1");
  if (!(cfg.ramp_ratio > 0.0)) throw UsageError("ramp ratio must be positive");
  return cfg.ramp_ratio == 1.0 ? fom::LoadRamp::uniform(cfg.steps) : fom::LoadRamp::geometric(cfg.steps, cfg.ramp_ratio);
}

namespace {

// values reordered into the model's own parameter order
doe::ParameterPoint model_point(const doe::ParameterSpace& space, const doe::ParameterPoint& p, ModelKind kind) {
  doe::ParameterPoint out;
  for (const auto& name : parameter_names(kind)) {
    auto it = std::find(space.names.begin(), space.names.end(), name);
    if (it == space.names.end())
      throw DataError("parameter space lacks '" + name + "' required by the " + to_string(kind) + " model");
    out.values.push_back(p.values[static_cast<std::size_t>(it - space.names.begin())]);
  }
  return out;
}

struct Sample {
  io::SnapshotBundle bundle;
  io::DofLayout layout;
  std::vector<int> bc;
  int dofs = 0;
};

Sample run_one(const doe::ParameterSpace& space, const doe::ParameterPoint& p, const LabConfig& cfg) {
  const doe::ParameterPoint mp = model_point(space, p, cfg.model);
  Sample s;
  switch (cfg.model) {
    case ModelKind::kPlate: {
      const auto sys = fom::assemble_plate(mp, cfg.grid, cfg.plate_load);
      s.bundle = io::bundle_from_linear(sys, fom::solve_linear(sys.stiffness, sys.load));
      s.layout = {sys.full_dofs, 3, {"translation", "rotation", "rotation"}};
      s.bc = sys.eliminated;
      s.dofs = static_cast<int>(sys.load.size());
      break;
    }
    case ModelKind::kSpring: {
      const fom::SpringChain chain(cfg.spring.springs, mp.values[0], mp.values[1], cfg.spring.tip_load);
      s.bundle = io::bundle_from_trajectory(fom::run_nonlinear_fom(chain, p, make_ramp(cfg), cfg.fixed_point));
      s.layout = {cfg.spring.springs + 1, 1, {"translation"}};
      s.bc = {0};
      s.dofs = chain.dofs();
      break;
    }
    case ModelKind::kTruss: {
      const auto net = fom::build_lattice(mp, cfg.lattice);
      s.bundle = io::bundle_from_trajectory(fom::run_nonlinear_fom(net, p, make_ramp(cfg), cfg.fixed_point));
      s.layout = {net.full_dofs(), 2, {"translation", "translation"}};
      s.bc = net.constrained();
      s.dofs = net.dofs();
      break;
    }
  }
  return s;
}

std::string entry_id(std::size_t i, std::size_t count) {
  const int width = std::max(3, static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, i);
  return buf;
}

}  // namespace

Campaign run_campaign(const doe::ParameterSpace& space, const std::vector<doe::PlanPoint>& points,
                      const LabConfig& cfg, int jobs) {
  space.validate();
  if (points.empty()) throw DataError("no parameter points to run");
  for (const auto& pp : points)
    if (pp.point.dim() != space.dim()) throw DataError("parameter point dimension does not match the space");
  if (jobs < 1) throw UsageError("--jobs must be >= 1");

  std::vector<Sample> samples(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        samples[i] = run_one(space, points[i].point, cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int nthreads = std::min<int>(jobs, static_cast<int>(points.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Campaign c;
  auto& m = c.manifest;
  m.kind = cfg.model == ModelKind::kPlate ? io::ProblemKind::kLinear : io::ProblemKind::kNonlinear;
  m.space = space;
  m.layout = samples.front().layout;
  m.bc = samples.front().bc;
  m.dofs = samples.front().dofs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string id = entry_id(i, points.size());
    m.entries.push_back({id, points[i].point, "snap_" + id, samples[i].bundle.columns(), points[i].corner});
    c.bundles.push_back(std::move(samples[i].bundle));
  }
  io::validate_manifest(m);
  return c;
}

io::SnapshotManifest write_campaign(const fs::path& dir, const Campaign& c) {
  rom::write_directory_atomically(dir, [&](const fs::path& tmp) {
    for (std::size_t i = 0; i < c.bundles.size(); ++i) {
      const auto& e = c.manifest.entries[i];
      io::write_bundle(tmp / e.path, c.manifest.space, e, c.bundles[i]);
    }
    io::write_json_file(tmp / "manifest.json", io::manifest_to_json(c.manifest));
  });
  io::SnapshotManifest m = c.manifest;
  m.root = dir;
  return m;
}

}  // namespace romforge::lab

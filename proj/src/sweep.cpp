#include "chainmatch/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "chainmatch/rng.hpp"

namespace chainmatch {

using nlohmann::json;

bool SweepRecord::operator==(const SweepRecord& o) const {
  // wall_time_ms is diagnostic output, not data
  return model == o.model && alpha == o.alpha && cf == o.cf &&
         expected_profit == o.expected_profit &&
         realized_profit_mean == o.realized_profit_mean &&
         service_rate_pct == o.service_rate_pct && served_count == o.served_count &&
         status == o.status;
}

bool SweepResult::operator==(const SweepResult& o) const {
  // threads is an execution knob with no influence on any record
  return spec.alpha_grid == o.spec.alpha_grid && spec.cf_grid == o.spec.cf_grid &&
         spec.models == o.spec.models && spec.depth_cutoff == o.spec.depth_cutoff &&
         spec.seed == o.spec.seed && spec.mc_samples == o.spec.mc_samples &&
         records == o.records;
}

namespace {

void validate_spec(const SweepSpec& spec, const Instance& inst) {
  auto bad = [](const std::string& m) { throw Error(Errc::InvalidDimensions, m); };
  if (spec.alpha_grid.empty() || spec.cf_grid.empty() || spec.models.empty())
    bad("sweep grids and model list must be nonempty");
  for (double a : spec.alpha_grid)
    if (!(a > 0.0 && a <= 1.0)) bad("alpha " + std::to_string(a) + " outside (0, 1]");
  for (double c : spec.cf_grid)
    if (!(c > 0.0 && c <= 1.0)) bad("cost factor " + std::to_string(c) + " outside (0, 1]");
  if (spec.mc_samples < 1) bad("mc_samples must be at least 1");
  Slot depth = spec.depth_cutoff == 0 ? inst.horizon.tau - 1 : spec.depth_cutoff;
  if (depth < 2 || depth > inst.horizon.tau - 1)
    bad("depth cutoff " + std::to_string(depth) + " outside [2, tau-1]");
  if (spec.threads < 1) bad("threads must be at least 1");
}

}  // namespace

SweepResult run_sweep(const Instance& inst, const SweepSpec& spec) {
  validate_spec(spec, inst);
  SweepSpec resolved = spec;
  if (resolved.depth_cutoff == 0) resolved.depth_cutoff = inst.horizon.tau - 1;

  // The pool is price-free; enumerate once and share across cells.
  ChainPool pool = enumerate_chains(inst, resolved.depth_cutoff);

  std::vector<Instance> by_cf;
  by_cf.reserve(resolved.cf_grid.size());
  for (double cf : resolved.cf_grid) {
    Instance v = inst;
    reprice_costs(v, cf);
    by_cf.push_back(std::move(v));
  }

  struct Cell {
    std::size_t cf_i, model_i, alpha_i;
  };
  std::vector<Cell> cells;
  for (std::size_t c = 0; c < resolved.cf_grid.size(); ++c)
    for (std::size_t m = 0; m < resolved.models.size(); ++m)
      for (std::size_t a = 0; a < resolved.alpha_grid.size(); ++a) cells.push_back({c, m, a});

  SweepResult result;
  result.spec = resolved;
  result.records.resize(cells.size());

  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= cells.size() || failed.load()) break;
      const Cell& cell = cells[i];
      try {
        const Instance& cell_inst = by_cf[cell.cf_i];
        Objective obj{resolved.models[cell.model_i], resolved.alpha_grid[cell.alpha_i],
                      resolved.cf_grid[cell.cf_i]};
        auto t0 = std::chrono::steady_clock::now();
        PackingProblem prob = build_problem(pool, cell_inst, obj);
        Solution sol = solve_exact(prob, cell_inst, SolveOptions{resolved.timeout_s});
        double expected = 0.0;
        for (const auto& ev : sol.per_chain) expected += ev.expected_profit;
        SimReport mc = monte_carlo(sol, cell_inst,
                                   SimConfig{resolved.mc_samples, derive_seed(resolved.seed, i)});
        auto t1 = std::chrono::steady_clock::now();

        SweepRecord rec;
        rec.model = obj.model;
        rec.alpha = obj.alpha;
        rec.cf = obj.cost_factor;
        rec.expected_profit = expected;
        rec.realized_profit_mean = mc.realized_profit_mean;
        rec.served_count = sol.served_user_count;
        rec.service_rate_pct =
            inst.trips.empty() ? 0.0
                               : 100.0 * sol.served_user_count /
                                     static_cast<double>(inst.trips.size());
        rec.status = sol.status;
        rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.records[i] = rec;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  if (resolved.threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < resolved.threads - 1; ++t) workers.emplace_back(worker);
    worker();
    for (auto& w : workers) w.join();
  }
  if (failed.load()) throw Error(Errc::InvalidDimensions, "sweep cell failed: " + first_error);
  return result;
}

std::map<std::uint32_t, LengthShare> chain_length_breakdown(const Solution& sol,
                                                            Slot depth_cutoff) {
  std::map<std::uint32_t, LengthShare> out;
  for (Slot d = 2; d <= depth_cutoff; ++d) out[static_cast<std::uint32_t>(d)] = LengthShare{};

  double total_profit = 0.0;
  std::size_t total_served = 0;
  std::map<std::uint32_t, double> profit_by_len;
  std::map<std::uint32_t, std::size_t> served_by_len;
  for (std::size_t i = 0; i < sol.chains.size(); ++i) {
    auto len = static_cast<std::uint32_t>(sol.chains[i].members.size());
    profit_by_len[len] += sol.per_chain[i].expected_profit;
    served_by_len[len] += sol.chains[i].members.size();
    total_profit += sol.per_chain[i].expected_profit;
    total_served += sol.chains[i].members.size();
  }
  for (auto& [len, share] : out) {
    if (total_profit != 0.0) share.profit_share_pct = 100.0 * profit_by_len[len] / total_profit;
    if (total_served != 0)
      share.served_share_pct =
          100.0 * static_cast<double>(served_by_len[len]) / static_cast<double>(total_served);
  }
  return out;
}

std::vector<ServedRow> served_summary(const std::vector<std::pair<Model, Solution>>& solutions,
                                      std::uint32_t baseline_round_trip_count,
                                      std::uint32_t total_users) {
  std::vector<ServedRow> rows;
  auto pct = [&](std::uint32_t n) {
    return total_users == 0 ? 0.0 : 100.0 * n / static_cast<double>(total_users);
  };
  rows.push_back(
      {"round_trip_baseline", baseline_round_trip_count, pct(baseline_round_trip_count)});
  for (const auto& [model, sol] : solutions)
    rows.push_back({model_name(model), sol.served_user_count, pct(sol.served_user_count)});
  return rows;
}

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

SolveStatus status_from_name(const std::string& s) {
  if (s == "optimal") return SolveStatus::Optimal;
  if (s == "timeout_incumbent") return SolveStatus::TimeoutIncumbent;
  return SolveStatus::Heuristic;
}

}  // namespace

std::string sweep_to_json(const SweepResult& result) {
  json models = json::array();
  for (Model m : result.spec.models) models.push_back(model_name(m));
  json records = json::array();
  for (const auto& r : result.records)
    records.push_back(json{{"model", model_name(r.model)},
                           {"alpha", r.alpha},
                           {"cf", r.cf},
                           {"expected_profit", r.expected_profit},
                           {"realized_profit_mean", r.realized_profit_mean},
                           {"service_rate_pct", r.service_rate_pct},
                           {"served_count", r.served_count},
                           {"status", solve_status_name(r.status)}});
  json j{{"schema_version", 1},
         {"spec",
          {{"alpha_grid", result.spec.alpha_grid},
           {"cf_grid", result.spec.cf_grid},
           {"models", models},
           {"depth_cutoff", result.spec.depth_cutoff},
           {"seed", result.spec.seed},
           {"mc_samples", result.spec.mc_samples},
           {"timeout_s", result.spec.timeout_s}}},
         {"records", records}};
  return j.dump(2) + "\n";
}

SweepResult sweep_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("sweep parse failed: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw Error(Errc::SchemaVersionMismatch, "unsupported sweep schema");
  SweepResult r;
  try {
    const auto& s = j.at("spec");
    r.spec.alpha_grid = s.at("alpha_grid").get<std::vector<double>>();
    r.spec.cf_grid = s.at("cf_grid").get<std::vector<double>>();
    r.spec.models.clear();
    for (const auto& mj : s.at("models")) r.spec.models.push_back(model_from_name(mj));
    r.spec.depth_cutoff = s.at("depth_cutoff").get<Slot>();
    r.spec.seed = s.at("seed").get<std::uint64_t>();
    r.spec.mc_samples = s.at("mc_samples").get<std::uint64_t>();
    r.spec.timeout_s = s.at("timeout_s").get<double>();
    for (const auto& rj : j.at("records")) {
      SweepRecord rec;
      rec.model = model_from_name(rj.at("model").get<std::string>());
      rec.alpha = rj.at("alpha").get<double>();
      rec.cf = rj.at("cf").get<double>();
      rec.expected_profit = rj.at("expected_profit").get<double>();
      rec.realized_profit_mean = rj.at("realized_profit_mean").get<double>();
      rec.service_rate_pct = rj.at("service_rate_pct").get<double>();
      rec.served_count = rj.at("served_count").get<std::uint32_t>();
      rec.status = status_from_name(rj.at("status").get<std::string>());
      r.records.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("sweep fields malformed: ") + e.what());
  }
  return r;
}

SweepResult parse_report(const std::string& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + json_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sweep_from_json(buf.str());
}

// Rows are cf x model; per alpha one expected-profit and one service column.
std::string table_csv(const SweepResult& result) {
  const SweepSpec& s = result.spec;
  std::ostringstream out;
  out << "cost_factor,model";
  for (double a : s.alpha_grid)
    out << ",profit@alpha=" << fmt(a, "%g") << ",service_pct@alpha=" << fmt(a, "%g");
  out << "\n";

  auto find = [&](Model m, double alpha, double cf) -> const SweepRecord* {
    for (const auto& r : result.records)
      if (r.model == m && r.alpha == alpha && r.cf == cf) return &r;
    return nullptr;
  };
  for (double cf : s.cf_grid) {
    for (Model m : s.models) {
      out << fmt(cf, "%g") << "," << model_name(m);
      for (double a : s.alpha_grid) {
        const SweepRecord* r = find(m, a, cf);
        if (!r) throw Error(Errc::InvalidField, "sweep result missing a grid cell");
        out << "," << fmt(r->expected_profit, "%.2f") << "," << fmt(r->service_rate_pct, "%.2f");
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string long_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "model,alpha,cf,metric,value\n";
  for (const auto& r : result.records) {
    std::string prefix = std::string(model_name(r.model)) + "," + fmt(r.alpha, "%g") + "," +
                         fmt(r.cf, "%g") + ",";
    out << prefix << "expected_profit," << fmt(r.expected_profit) << "\n";
    out << prefix << "realized_profit_mean," << fmt(r.realized_profit_mean) << "\n";
    out << prefix << "service_rate_pct," << fmt(r.service_rate_pct) << "\n";
    out << prefix << "served_count," << r.served_count << "\n";
  }
  return out.str();
}

std::string served_summary_csv(const std::vector<ServedRow>& rows) {
  std::ostringstream out;
  out << "label,served,pct_of_total\n";
  for (const auto& r : rows) out << r.label << "," << r.served << "," << fmt(r.pct, "%.2f") << "\n";
  return out.str();
}

void emit_report(const SweepResult& result, const std::string& out_dir) {
  if (result.records.empty())
    throw Error(Errc::IoError, "refusing to emit an empty sweep result");
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::string path = out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
    out << content;
    if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
  };
  write("sweep.json", sweep_to_json(result));
  write("table.csv", table_csv(result));
  write("long.csv", long_csv(result));
}

}  // namespace chainmatch

#include "nhplan/service.hpp"

#include <httplib.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nhplan {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Write then rename so readers never see half a file.
void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::optional<RunStatus> parse_status(std::string_view s) {
  if (s == "queued") return RunStatus::queued;
  if (s == "running") return RunStatus::running;
  if (s == "done") return RunStatus::done;
  if (s == "failed") return RunStatus::failed;
  return std::nullopt;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  return true;
}

std::string padded(const char* prefix, int n) {
  std::ostringstream s;
  s << prefix << std::setw(6) << std::setfill('0') << n;
  return s.str();
}

void send_error(httplib::Response& res, int status, const std::string& field, const std::string& message) {
  Json err = {{"message", message}};
  if (!field.empty()) err["field"] = field;
  res.status = status;
  res.set_content(Json{{"error", err}}.dump(), "application/json");
}

}  // namespace

fs::path bundled_cohort_path() { return fs::path(NHPLAN_DATA_DIR) / "residents_sample.csv"; }

Cohort bundled_cohort() { return ingest_cohort(bundled_cohort_path()); }

PlanResult execute_run(const RunRequest& request, const Cohort& cohort) {
  request.scenario.validate();
  request.plan.validate();
  const PlanningFit fit = fit_planning_models(cohort);
  SimModels models = fit.models;
  models.pool = apply_scenario(cohort, request.scenario, request.plan.seed).residents();
  return plan_facility(models, request.plan, generate_patterns(request.plan.patterns), request.scenario.id);
}

void write_band_csv(std::ostream& out, const std::vector<DemandTrace>& traces) {
  std::vector<std::vector<double>> census;
  std::vector<std::vector<double>> demand;
  for (const auto& t : traces) {
    census.emplace_back(t.census.begin(), t.census.end());
    demand.push_back(t.demand_minutes);
  }
  const Band c = summarize(census);
  const Band d = summarize(demand);
  out << "day,census_mean,census_lower,census_upper,demand_mean,demand_lower,demand_upper\n";
  out << std::setprecision(10);
  for (std::size_t t = 0; t < c.mean.size(); ++t)
    out << (t + 1) << ',' << c.mean[t] << ',' << c.lower[t] << ',' << c.upper[t] << ',' << d.mean[t] << ','
        << d.lower[t] << ',' << d.upper[t] << "\n";
}

std::string_view to_token(RunStatus s) {
  switch (s) {
    case RunStatus::queued: return "queued";
    case RunStatus::running: return "running";
    case RunStatus::done: return "done";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

Json to_json(const RunRecord& r) {
  Json j = {{"run_id", r.run_id},
            {"created_at", r.created_at},
            {"request", r.request},
            {"status", std::string(to_token(r.status))},
            {"artifacts", r.artifacts}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "runs");
  fs::create_directories(root_ / "cohorts");
  for (const auto& e : fs::directory_iterator(root_ / "runs")) {
    const fs::path rec = e.path() / "record.json";
    if (!fs::exists(rec)) continue;
    const Json j = Json::parse(read_file(rec), nullptr, false);
    if (j.is_discarded()) continue;
    RunRecord r;
    r.run_id = j.value("run_id", e.path().filename().string());
    r.created_at = j.value("created_at", "");
    r.request = j.value("request", Json::object());
    r.status = parse_status(j.value("status", "failed")).value_or(RunStatus::failed);
    r.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
    r.error = j.value("error", "");
    if (r.status == RunStatus::queued || r.status == RunStatus::running) {
      // the process that owned it is gone
      r.status = RunStatus::failed;
      r.error = "interrupted";
      persist(r);
    }
    const std::string& id = r.run_id;
    if (id.rfind("run-", 0) == 0) next_run_ = std::max(next_run_, std::atoi(id.c_str() + 4) + 1);
    runs_[id] = std::move(r);
  }
  for (const auto& e : fs::directory_iterator(root_ / "cohorts")) {
    const std::string id = e.path().stem().string();
    if (id.rfind("cohort-", 0) == 0) next_cohort_ = std::max(next_cohort_, std::atoi(id.c_str() + 7) + 1);
  }
}

RunStore::~RunStore() { wait_all(); }

fs::path RunStore::run_dir(const std::string& id) const { return root_ / "runs" / id; }

std::string RunStore::add_cohort(const std::string& csv, std::string id) {
  std::istringstream in(csv);
  const Cohort c = read_cohort_csv(in);
  if (c.empty()) throw CohortError("cohort has no residents");
  std::lock_guard lock(mu_);
  if (id.empty()) {
    do {
      id = padded("cohort-", next_cohort_++);
    } while (fs::exists(root_ / "cohorts" / (id + ".csv")));
  } else if (!valid_id(id)) {
    throw std::invalid_argument("id: use 1-64 letters, digits, '-' or '_'");
  }
  const fs::path path = root_ / "cohorts" / (id + ".csv");
  if (fs::exists(path)) throw std::logic_error("cohort id already exists: " + id);
  std::ostringstream out;
  write_cohort_csv(out, c);
  write_atomic(path, out.str());
  return id;
}

std::optional<Cohort> RunStore::cohort(const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  const fs::path path = root_ / "cohorts" / (id + ".csv");
  if (!fs::exists(path)) return std::nullopt;
  return ingest_cohort(path);
}

void RunStore::persist(const RunRecord& r) const {
  fs::create_directories(run_dir(r.run_id));
  write_atomic(run_dir(r.run_id) / "record.json", to_json(r).dump(2));
}

std::string RunStore::submit(const RunRequest& request) {
  if (!request.cohort.empty() && !cohort(request.cohort))
    throw ConfigError("cohort", "unknown cohort id " + request.cohort);
  std::lock_guard lock(mu_);
  std::string id;
  do {
    id = padded("run-", next_run_++);
  } while (fs::exists(run_dir(id)));
  RunRecord r;
  r.run_id = id;
  r.created_at = utc_now();
  r.request = to_json(request);
  fs::create_directories(run_dir(id));
  write_atomic(run_dir(id) / "request.json", r.request.dump(2));
  persist(r);
  runs_[id] = r;
  workers_.emplace_back([this, id, request] { execute(id, request); });
  return id;
}

void RunStore::execute(std::string id, RunRequest request) {
  auto set_status = [&](RunStatus s, const std::string& error = {}, std::map<std::string, std::string> art = {}) {
    std::lock_guard lock(mu_);
    RunRecord& r = runs_.at(id);
    r.status = s;
    r.error = error;
    r.artifacts = std::move(art);
    persist(r);
  };
  set_status(RunStatus::running);
  const fs::path dir = run_dir(id);
  try {
    const Cohort c = request.cohort.empty() ? bundled_cohort() : *cohort(request.cohort);
    const PlanResult result = execute_run(request, c);
    std::ostringstream trace;
    write_band_csv(trace, result.traces);
    std::ostringstream plan;
    write_plan(plan, generate_patterns(request.plan.patterns), result.staffing);
    write_atomic(dir / "trace.csv", trace.str());
    write_atomic(dir / "plan.csv", plan.str());
    write_atomic(dir / "result.json", plan_summary(result).dump(2));
    set_status(RunStatus::done, {},
               {{"result", (dir / "result.json").string()},
                {"trace", (dir / "trace.csv").string()},
                {"plan", (dir / "plan.csv").string()}});
  } catch (const std::exception& e) {
    for (const char* f : {"trace.csv", "plan.csv", "result.json"}) fs::remove(dir / f);
    set_status(RunStatus::failed, e.what());
  }
}

std::optional<RunRecord> RunStore::record(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = runs_.find(id);
  if (it == runs_.end()) return std::nullopt;
  return it->second;
}

std::optional<Json> RunStore::result(const std::string& id) const {
  const auto r = record(id);
  if (!r || r->status != RunStatus::done) return std::nullopt;
  return Json::parse(read_file(run_dir(id) / "result.json"));
}

void RunStore::wait(const std::string& id) {
  for (;;) {
    const auto r = record(id);
    if (!r || r->status == RunStatus::done || r->status == RunStatus::failed) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void RunStore::wait_all() {
  std::vector<std::thread> w;
  {
    std::lock_guard lock(mu_);
    w.swap(workers_);
  }
  for (auto& t : w)
    if (t.joinable()) t.join();
}

void install_routes(httplib::Server& server, RunStore& store) {
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  server.Post("/cohorts", [&store](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string id = store.add_cohort(req.body, req.has_param("id") ? req.get_param_value("id") : "");
      res.status = 201;
      res.set_content(Json{{"cohort_id", id}}.dump(), "application/json");
    } catch (const CohortError& e) {
      Json rows = Json::array();
      for (const auto& r : e.rows()) rows.push_back({{"row", r.row}, {"message", r.message}});
      res.status = 400;
      res.set_content(Json{{"error", {{"message", e.what()}, {"rows", rows}}}}.dump(), "application/json");
    } catch (const std::logic_error& e) {
      // invalid_argument derives from logic_error; only a taken id is a conflict
      if (dynamic_cast<const std::invalid_argument*>(&e)) send_error(res, 400, "id", e.what());
      else send_error(res, 409, "id", e.what());
    }
  });

  server.Post("/runs", [&store](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return send_error(res, 400, "", "body is not valid JSON");
    try {
      const std::string id = store.submit(run_request_from_json(body));
      res.status = 202;
      res.set_content(Json{{"run_id", id}}.dump(), "application/json");
    } catch (const ConfigError& e) {
      send_error(res, 400, e.field(), e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, "", e.what());
    }
  });

  server.Get(R"(/runs/([A-Za-z0-9_-]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto r = store.record(id);
    if (!r) return send_error(res, 404, "", "unknown run id " + id);
    Json j = to_json(*r);
    if (const auto result = store.result(id)) j["result"] = *result;
    res.set_content(j.dump(), "application/json");
  });

  server.Get(R"(/runs/([A-Za-z0-9_-]+)/trace)", [&store](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto r = store.record(id);
    if (!r) return send_error(res, 404, "", "unknown run id " + id);
    if (r->status != RunStatus::done) return send_error(res, 409, "", "run " + id + " is " + std::string(to_token(r->status)));
    std::ifstream in(r->artifacts.at("trace"), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    res.set_content(s.str(), "text/csv");
  });

  server.Get("/scenarios/compare", [&store](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("ids")) return send_error(res, 400, "ids", "comma-separated run ids required");
    Json rows = Json::array();
    std::istringstream ids(req.get_param_value("ids"));
    std::string id;
    while (std::getline(ids, id, ',')) {
      if (id.empty()) continue;
      const auto r = store.record(id);
      if (!r) return send_error(res, 404, "ids", "unknown run id " + id);
      const auto result = store.result(id);
      if (!result) return send_error(res, 409, "ids", "run " + id + " is " + std::string(to_token(r->status)));
      Json row = result->at("row");
      row["run_id"] = id;
      rows.push_back(row);
    }
    res.set_content(Json{{"rows", rows}}.dump(), "application/json");
  });
}

int serve(RunStore& store, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, store);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace nhplan

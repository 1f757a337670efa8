#include "nhplan/service.hpp"
#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

using namespace nhplan;
namespace fs = std::filesystem;

namespace {

// Small enough for a unit test, large enough for the planning window.
const Json kQuick = {{"seed", 7}, {"capacity", {{"r", 20}, {"T", 200}}}, {"workforce", {{"saa_samples", 20}}}};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nhplan-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error_field(const Json& j) {
  try {
    run_request_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

// httplib server on an ephemeral port for the lifetime of the object.
struct LiveServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit LiveServer(RunStore& store) {
    install_routes(server, store);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

Json poll_until_finished(httplib::Client& cli, const std::string& id) {
  for (int i = 0; i < 6000; ++i) {
    const auto res = cli.Get("/runs/" + id);
    REQUIRE(res);
    const Json j = Json::parse(res->body);
    const std::string status = j.at("status");
    if (status == "done" || status == "failed") return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  FAIL("run did not finish");
  return {};
}

int run_cli(const std::string& args) { return std::system((std::string(NHPLAN_CLI) + " " + args).c_str()); }

}  // namespace

TEST_CASE("configuration documents") {
  CHECK(config_error_field({{"capacity", {{"eta", 1.5}}}}) == "capacity.eta");
  CHECK(config_error_field({{"capacity", {{"tau_c", "high"}}}}) == "capacity.tau_c");
  CHECK(config_error_field({{"capacity", {{"bogus", 1}}}}) == "capacity.bogus");
  CHECK(config_error_field({{"workforce", {{"understaff_cost", -1}}}}).rfind("workforce", 0) == 0);
  CHECK(config_error_field({{"scenario", "S9"}}) == "scenario");
  CHECK(config_error_field({{"scenario", {{"adl_mean_scale", 0}}}}).rfind("scenario", 0) == 0);
  CHECK(config_error_field({{"colour", "red"}}) == "colour");
  CHECK(config_error_field({{"seed", -3}}) == "seed");

  const RunRequest r = run_request_from_json(kQuick);
  CHECK(r.plan.seed == 7);
  CHECK(r.plan.capacity.replications == 20);
  CHECK(r.plan.capacity.horizon_days == 200);
  CHECK(r.plan.cost.saa_samples == 20);
  CHECK(r.scenario.is_identity());
  // the stored snapshot parses back to the same request
  const Json snap = to_json(r);
  CHECK(to_json(run_request_from_json(snap)) == snap);
}

TEST_CASE("model file round trip") {
  const Cohort c = bundled_cohort();
  const PlanningFit fit = fit_planning_models(c);
  const Json doc = models_document(fit);
  CHECK(doc.at("format") == "nhplan-models/1");
  SimModels back = sim_models_from_json(Json::parse(doc.dump()));
  CHECK(back.pool.empty());
  const CompetingRiskModel& a = fit.models.short_los;
  const CompetingRiskModel& b = back.short_los;
  REQUIRE(a.causes() == b.causes());
  for (std::size_t m = 0; m < a.causes(); ++m) {
    CHECK(a.coefficients[m] == b.coefficients[m]);
    CHECK(a.baseline[m].max_day() == b.baseline[m].max_day());
    for (int d = 0; d <= a.baseline[m].max_day(); ++d)
      CHECK(b.baseline[m].at(d) == doctest::Approx(a.baseline[m].at(d)).epsilon(1e-14));
  }
  CHECK(back.long_los.log_mean == fit.models.long_los.log_mean);
  CHECK(back.arrivals.short_stay.size == fit.models.arrivals.short_stay.size);
  CHECK(back.needs.count() == fit.models.needs.count());
  // baselines are written as (day, increment) jumps
  const Json& jumps = doc.at("short_stay").at("baseline_hazard").at(0).at("jumps");
  CHECK(jumps.at(0).size() == 2);
}

TEST_CASE("run store") {
  const fs::path root = scratch("store");
  std::string done_id;
  std::string failed_id;
  {
    RunStore store(root);
    done_id = store.submit(run_request_from_json(kQuick));
    RunRequest bad = run_request_from_json(kQuick);
    bad.plan.cost.saa_samples = 0;
    failed_id = store.submit(bad);
    store.wait_all();

    const auto r = store.record(done_id);
    REQUIRE(r);
    CHECK(r->status == RunStatus::done);
    for (const char* f : {"request.json", "record.json", "result.json", "trace.csv", "plan.csv"})
      CHECK(fs::exists(root / "runs" / done_id / f));
    CHECK(read_text(root / "runs" / done_id / "trace.csv").rfind("day,census_mean", 0) == 0);

    const auto f = store.record(failed_id);
    REQUIRE(f);
    CHECK(f->status == RunStatus::failed);
    CHECK_FALSE(f->error.empty());
    for (const char* name : {"result.json", "trace.csv", "plan.csv"}) CHECK_FALSE(fs::exists(root / "runs" / failed_id / name));
    CHECK_FALSE(store.result(failed_id));

    // the snapshot reproduces the artifacts
    const RunRequest again = run_request_from_json(Json::parse(read_text(root / "runs" / done_id / "request.json")));
    const PlanResult direct = execute_run(again, bundled_cohort());
    CHECK(plan_summary(direct) == *store.result(done_id));
    std::ostringstream trace;
    write_band_csv(trace, direct.traces);
    CHECK(trace.str() == read_text(root / "runs" / done_id / "trace.csv"));
  }
  // a run left running by a dead process is marked failed on reload
  {
    Json rec = Json::parse(read_text(root / "runs" / done_id / "record.json"));
    rec["run_id"] = "run-stale";
    rec["status"] = "running";
    fs::create_directories(root / "runs" / "run-stale");
    std::ofstream(root / "runs" / "run-stale" / "record.json") << rec.dump();
  }
  RunStore reopened(root);
  CHECK(reopened.record(done_id)->status == RunStatus::done);
  CHECK(reopened.result(done_id));
  CHECK(reopened.record("run-stale")->status == RunStatus::failed);
  // fresh ids do not collide with existing directories
  CHECK(reopened.submit(run_request_from_json(kQuick)) != done_id);
  reopened.wait_all();
  fs::remove_all(root);
}

TEST_CASE("cohort uploads") {
  const fs::path root = scratch("cohorts");
  RunStore store(root);
  const std::string csv = read_text(bundled_cohort_path());
  CHECK(store.add_cohort(csv, "home") == "home");
  CHECK(store.cohort("home")->size() == 677);
  CHECK_THROWS_AS(store.add_cohort(csv, "home"), std::logic_error);
  CHECK_THROWS_AS(store.add_cohort("not,a,cohort\n1,2,3\n", "junk"), CohortError);
  CHECK_FALSE(store.cohort("junk"));
  RunRequest r = run_request_from_json(kQuick);
  r.cohort = "missing";
  CHECK_THROWS_AS(store.submit(r), ConfigError);
  fs::remove_all(root);
}

TEST_CASE("HTTP API") {
  const fs::path root = scratch("http");
  RunStore store(root);
  LiveServer live(store);
  httplib::Client cli = live.client();

  SUBCASE("health and unknown ids") {
    CHECK(cli.Get("/health")->status == 200);
    CHECK(cli.Get("/runs/run-999999")->status == 404);
    CHECK(cli.Get("/runs/run-999999/trace")->status == 404);
    CHECK(cli.Get("/scenarios/compare?ids=run-999999")->status == 404);
    CHECK(cli.Get("/scenarios/compare")->status == 400);
  }
  SUBCASE("invalid run requests") {
    auto res = cli.Post("/runs", R"({"capacity": {"eta": 1.2}})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(Json::parse(res->body).at("error").at("field") == "capacity.eta");
    CHECK(cli.Post("/runs", "{not json", "application/json")->status == 400);
  }
  SUBCASE("cohort upload conflicts and row errors") {
    const std::string csv = read_text(bundled_cohort_path());
    CHECK(cli.Post("/cohorts?id=facility", csv, "text/csv")->status == 201);
    CHECK(cli.Post("/cohorts?id=facility", csv, "text/csv")->status == 409);
    std::string broken = csv;
    // push the first resident's ADL out of range
    const auto first_row = broken.find('\n') + 1;
    std::istringstream header(csv.substr(0, first_row - 1));
    std::string col;
    int adl_col = 0;
    for (int i = 0; std::getline(header, col, ','); ++i)
      if (col == "adl") adl_col = i;
    std::size_t pos = first_row;
    for (int i = 0; i < adl_col; ++i) pos = broken.find(',', pos) + 1;
    broken.replace(pos, broken.find_first_of(",\n", pos) - pos, "20");
    auto res = cli.Post("/cohorts?id=broken", broken, "text/csv");
    REQUIRE(res);
    CHECK(res->status == 400);
    const Json rows = Json::parse(res->body).at("error").at("rows");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("row") == 1);
  }
  SUBCASE("a run goes from submission to comparison") {
    Json body = kQuick;
    body["scenario"] = "S3";
    auto res = cli.Post("/runs", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 202);
    const std::string id = Json::parse(res->body).at("run_id");
    const Json rec = poll_until_finished(cli, id);
    REQUIRE(rec.at("status") == "done");
    CHECK(rec.at("request") == to_json(run_request_from_json(body)));
    CHECK(rec.at("result").at("row").at("scenario_id") == "S3");

    auto trace = cli.Get("/runs/" + id + "/trace");
    REQUIRE(trace);
    CHECK(trace->status == 200);
    CHECK(trace->body.rfind("day,census_mean", 0) == 0);

    auto cmp = cli.Get("/scenarios/compare?ids=" + id);
    REQUIRE(cmp);
    const Json rows = Json::parse(cmp->body).at("rows");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("run_id") == id);
    CHECK(rows[0].at("kappa") == rec.at("result").at("row").at("kappa"));
  }
  store.wait_all();
  fs::remove_all(root);
}

TEST_CASE("API and CLI agree on S1") {
  const fs::path dir = scratch("parity");
  {
    std::ofstream cfg(dir / "config.json");
    cfg << kQuick.dump();
  }
  const fs::path out = dir / "cli.json";
  REQUIRE(run_cli("scenario run --scenarios S1 --config " + (dir / "config.json").string() + " --out " + out.string() +
                  " > /dev/null") == 0);
  const Json cli_rows = Json::parse(read_text(out)).at("rows");
  REQUIRE(cli_rows.size() == 1);

  RunStore store(dir / "store");
  LiveServer live(store);
  httplib::Client cli = live.client();
  Json body = kQuick;
  body["scenario"] = "S1";
  const std::string id = Json::parse(cli.Post("/runs", body.dump(), "application/json")->body).at("run_id");
  const Json rec = poll_until_finished(cli, id);
  REQUIRE(rec.at("status") == "done");
  CHECK(rec.at("result").at("row") == cli_rows[0]);

  SUBCASE("identity scenario list equals the baseline run") {
    const ScenarioComparison cmp = scenario_compare(bundled_cohort(), {preset_scenario("S1")}, run_request_from_json(kQuick).plan);
    REQUIRE(cmp.rows.size() == 1);
    CHECK(to_json(cmp.rows[0]) == cli_rows[0]);
  }
  store.wait_all();
  fs::remove_all(dir);
}

TEST_CASE("CLI") {
  const fs::path dir = scratch("cli");
  SUBCASE("scenario tables are byte-identical across runs") {
    std::ofstream(dir / "config.json") << kQuick.dump();
    const std::string base = "scenario run --scenarios S1,S3 --seed 7 --config " + (dir / "config.json").string();
    REQUIRE(run_cli(base + " --out " + (dir / "a.json").string() + " > /dev/null") == 0);
    REQUIRE(run_cli(base + " --out " + (dir / "b.json").string() + " > /dev/null") == 0);
    CHECK(read_text(dir / "a.json") == read_text(dir / "b.json"));
  }
  SUBCASE("fit writes a model file that simulate accepts") {
    REQUIRE(run_cli("fit --out " + (dir / "models.json").string() + " > " + (dir / "fit.txt").string()) == 0);
    const Json summary = Json::parse(read_text(dir / "fit.txt"));
    CHECK(summary.at("residents") == 677);
    CHECK(summary.at("need_clusters") == 14);
    REQUIRE(run_cli("simulate --models " + (dir / "models.json").string() + " --capacity 80 -r 5 -T 30 --out " +
                    (dir / "bands.csv").string() + " > /dev/null") == 0);
    CHECK(read_text(dir / "bands.csv").rfind("day,census_mean", 0) == 0);
  }
  SUBCASE("usage and runtime errors") {
    CHECK(WEXITSTATUS(run_cli("frobnicate > /dev/null 2>&1")) == 2);
    CHECK(WEXITSTATUS(run_cli("capacity --eta 2 -r 2 -T 10 > /dev/null 2> " + (dir / "err.txt").string())) == 1);
    CHECK(Json::parse(read_text(dir / "err.txt")).at("error").contains("message"));
  }
  fs::remove_all(dir);
}

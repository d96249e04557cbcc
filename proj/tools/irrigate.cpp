// irrigate: train / simulate / serve / oracle-table
//
// Exit codes: 0 ok, 1 usage, 2 runtime failure.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "irrigation/mlp.hpp"
#include "irrigation/protocol.hpp"
#include "irrigation/rulebase.hpp"
#include "irrigation/service.hpp"
#include "irrigation/simd.hpp"
#include "irrigation/simulator.hpp"
#include "irrigation/weights_io.hpp"

namespace {

using namespace irrigation;
using nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

// --- train ------------------------------------------------------------------

struct TrainOptions {
  int grid = 11;
  int eval_grid = 13;
  std::uint64_t seed = 1;
  std::string out;
  double learning_rate = 0.1;
  int epochs = 2000;
  std::size_t batch = 32;
  double target = 0.99;
  bool json = false;
};

int run_train(const TrainOptions& o) {
  mlp::NormalizationRanges ranges;
  const mlp::Dataset train_set = mlp::generate_dataset(o.grid, ranges);
  const mlp::Dataset eval_set = mlp::generate_dataset(o.eval_grid, ranges);

  mlp::TrainingConfig config;
  config.learning_rate = o.learning_rate;
  config.epochs = o.epochs;
  config.batch_size = o.batch;
  config.seed = o.seed;
  config.target_accuracy = o.target;

  const mlp::TrainingResult result = mlp::train(train_set, config);
  const double agreement = mlp::accuracy(result.weights, eval_set);
  if (!o.out.empty()) mlp::save_model(mlp::Model{result.weights, ranges, o.seed}, o.out);

  const double final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
  if (o.json) {
    ordered_json j;
    j["seed"] = o.seed;
    j["grid"] = o.grid;
    j["eval_grid"] = o.eval_grid;
    j["train_examples"] = train_set.size();
    j["eval_examples"] = eval_set.size();
    j["epochs_run"] = result.epochs_run;
    j["final_loss"] = final_loss;
    j["train_accuracy"] = result.train_accuracy;
    j["oracle_agreement"] = agreement;
    j["backend"] = std::string(simd::to_string(simd::active_backend()));
    if (!o.out.empty()) j["weights"] = o.out;
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "trained on " << train_set.size() << " examples (seed " << o.seed << ", "
              << result.epochs_run << " epochs, final loss " << final_loss << ")\n"
              << "train accuracy   " << percent(result.train_accuracy) << "\n"
              << "oracle agreement " << percent(agreement) << " on " << eval_set.size()
              << " held-out grid points\n";
    if (!o.out.empty()) std::cout << "weights written to " << o.out << "\n";
  }
  return kOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::string mode = "rule";
  std::string weights;
  double duration = 3600.0;
  std::uint64_t seed = 0;
  std::string out = "-";
  double moisture = 30.0;
  std::optional<double> temperature;
  std::optional<double> humidity;
  double period_s = 10.0;
  double restart_gap_s = 5.0;
  double poll_s = 2.0;
  bool json = false;
};

int run_simulate(const SimulateOptions& o) {
  sim::ClosedLoopConfig config;
  config.cycle = control::CycleConfig{
      .period_s = o.period_s, .poll_interval_s = o.poll_s, .min_restart_gap_s = o.restart_gap_s};
  config.cycle.validate();
  if (o.mode == "auto") {
    if (o.weights.empty()) throw UsageError("--mode auto needs --weights");
    config.mode = control::AutoMode{};
  } else {
    config.mode = control::RuleOnlyMode{};
  }
  if (!o.weights.empty()) config.model = mlp::load_model(o.weights);

  sim::PlantParams params;
  params.seed = o.seed;
  sim::ClimateProfile climate;
  if (o.temperature || o.humidity) {
    climate = sim::ClimateProfile::constant(o.temperature.value_or(climate.temperature_mean_c),
                                            o.humidity.value_or(climate.humidity_mean_pct));
  }
  const sim::SimulationRun run =
      sim::run_closed_loop(sim::initial_state(o.moisture, climate, params), params, config, o.duration);

  const std::string log = telemetry::to_ndjson(run.events);
  if (o.out == "-") {
    std::cout << log;
  } else {
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + o.out);
    f << log;
    if (!f.flush()) throw std::runtime_error("cannot write " + o.out);
  }

  int activations = 0;
  for (const auto& e : run.events) {
    if (const auto* p = std::get_if<telemetry::PumpStateChanged>(&e.body); p && p->on) ++activations;
  }
  double lo = run.trace.front().soil_moisture_pct, hi = lo;
  for (const auto& s : run.trace) {
    lo = std::min(lo, s.soil_moisture_pct);
    hi = std::max(hi, s.soil_moisture_pct);
  }
  // Summary goes to stderr when the log itself is on stdout.
  std::ostream& summary = o.out == "-" ? std::cerr : std::cout;
  if (o.json) {
    ordered_json j;
    j["events"] = run.events.size();
    j["pump_activations"] = activations;
    j["final_moisture_pct"] = run.final_state.soil_moisture_true;
    j["min_moisture_pct"] = lo;
    j["max_moisture_pct"] = hi;
    summary << j.dump() << "\n";
  } else {
    summary << run.events.size() << " events, " << activations << " pump activations, moisture "
            << lo << ".." << hi << " %, final " << run.final_state.soil_moisture_true << " %\n";
  }
  return kOk;
}

// --- serve ------------------------------------------------------------------

struct ServeOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;
  std::uint16_t ws_port = 8081;
  std::uint16_t sensor_port = 7070;
  std::string log;
  std::string mode = "rule";
  std::string weights;
  bool json = false;
};

int run_serve(const ServeOptions& o) {
  telemetry::ServiceConfig config;
  config.host = o.host;
  config.http_port = o.port;
  config.ws_port = o.ws_port;
  config.sensor_port = o.sensor_port;
  config.log_path = o.log;
  if (o.mode == "auto") {
    if (o.weights.empty()) throw UsageError("--mode auto needs --weights");
    config.mode = control::AutoMode{};
  }
  if (!o.weights.empty()) config.model = mlp::load_model(o.weights);

  // Block the signals before any thread exists so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  telemetry::Service service(std::move(config));
  service.start();
  if (o.json) {
    ordered_json j;
    j["http_port"] = service.http_port();
    j["ws_port"] = service.ws_port();
    j["sensor_port"] = service.sensor_port();
    std::cout << j.dump() << std::endl;
  } else {
    std::cout << "http on " << o.host << ":" << service.http_port() << ", stream on ws://" << o.host
              << ":" << service.ws_port() << "/stream, sensors on " << o.host << ":"
              << service.sensor_port() << std::endl;
  }

  int sig = 0;
  sigwait(&signals, &sig);
  service.stop();
  std::cerr << "stopped after " << service.status().event_count << " events\n";
  return kOk;
}

// --- oracle-table -----------------------------------------------------------

int run_oracle_table(bool json) {
  const auto rows = rules::enumerate_table();
  if (json) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back({{"temperature", rules::to_string(r.bands.temperature)},
                     {"humidity", rules::to_string(r.bands.humidity)},
                     {"soil_moisture", rules::to_string(r.bands.soil_moisture)},
                     {"duty", std::string(to_string(r.duty))}});
    }
    std::cout << arr.dump() << "\n";
    return kOk;
  }
  std::printf("%-12s %-12s %-14s %s\n", "temperature", "humidity", "soil_moisture", "duty");
  for (const auto& r : rows) {
    std::printf("%-12s %-12s %-14s %s\n", std::string(rules::to_string(r.bands.temperature)).c_str(),
                std::string(rules::to_string(r.bands.humidity)).c_str(),
                std::string(rules::to_string(r.bands.soil_moisture)).c_str(),
                std::string(to_string(r.duty)).c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart irrigation controller: rule base, MLP, simulator and telemetry service"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "irrigate 0.1.0");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the 3-5-3 network against the rule base");
  train_cmd->add_option("--grid", train.grid, "Training grid points per axis")
      ->capture_default_str()
      ->check(CLI::Range(2, 101));
  train_cmd->add_option("--eval-grid", train.eval_grid, "Held-out evaluation grid points per axis")
      ->capture_default_str()
      ->check(CLI::Range(2, 101));
  train_cmd->add_option("--seed", train.seed, "Initialization and shuffle seed")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Write the trained weights to this JSON file");
  train_cmd->add_option("--lr", train.learning_rate, "Learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train.epochs, "Maximum epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.batch, "Minibatch size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--target", train.target, "Stop early at this training accuracy")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_flag("--json", train.json, "Print the report as one JSON object");

  SimulateOptions simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the plant and controller in a closed loop");
  sim_cmd->add_option("--mode", simulate.mode, "Controller mode")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "rule"}));
  sim_cmd->add_option("--weights", simulate.weights, "Trained weights (required for --mode auto)")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--duration", simulate.duration, "Simulated seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", simulate.seed, "Sensor noise seed")->capture_default_str();
  sim_cmd->add_option("--out", simulate.out, "Event log path, - for stdout")->capture_default_str();
  sim_cmd->add_option("--moisture", simulate.moisture, "Initial soil moisture, percent")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 100.0));
  sim_cmd->add_option("--temperature", simulate.temperature,
                      "Hold temperature constant (default: diurnal 25 +/- 10 C)");
  sim_cmd->add_option("--humidity", simulate.humidity,
                      "Hold humidity constant (default: diurnal 50 +/- 20 %)");
  sim_cmd->add_option("--period", simulate.period_s, "Full-duty on-time, seconds")->capture_default_str();
  sim_cmd->add_option("--restart-gap", simulate.restart_gap_s, "Minimum off-time between cycles, seconds")
      ->capture_default_str();
  sim_cmd->add_option("--poll", simulate.poll_s, "Sensor poll interval, seconds")->capture_default_str();
  sim_cmd->add_flag("--json", simulate.json, "Print the summary as one JSON object");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the telemetry service");
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str()->envname("IRRIGATION_HOST");
  serve_cmd->add_option("--port", serve.port, "HTTP port (0 picks a free one)")
      ->capture_default_str()
      ->envname("IRRIGATION_PORT");
  serve_cmd->add_option("--ws-port", serve.ws_port, "WebSocket port")
      ->capture_default_str()
      ->envname("IRRIGATION_WS_PORT");
  serve_cmd->add_option("--sensor-port", serve.sensor_port, "Sensor line-protocol port")
      ->capture_default_str()
      ->envname("IRRIGATION_SENSOR_PORT");
  serve_cmd->add_option("--log", serve.log, "Append-only event log; replayed on start")
      ->envname("IRRIGATION_LOG");
  serve_cmd->add_option("--mode", serve.mode, "Controller mode for a fresh log")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "rule"}))
      ->envname("IRRIGATION_MODE");
  serve_cmd->add_option("--weights", serve.weights, "Trained weights")->envname("IRRIGATION_WEIGHTS");
  serve_cmd->add_flag("--json", serve.json, "Print the bound ports as one JSON object");

  bool table_json = false;
  auto* table_cmd = app.add_subcommand("oracle-table", "Print all 27 band combinations and their duty");
  table_cmd->add_flag("--json", table_json, "Print as a JSON array");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*sim_cmd) return run_simulate(simulate);
    if (*serve_cmd) return run_serve(serve);
    if (*table_cmd) return run_oracle_table(table_json);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

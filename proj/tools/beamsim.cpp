// Copyright 2026 The beamsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// beamsim: dataset generation, training, evaluation and complexity tables.
//
//   beamsim gen        --config configs/default.cfg --scenario s1 --out run
//   beamsim train      --config configs/default.cfg --scenario s1 --out run
//   beamsim eval       --config configs/default.cfg --scenario s1 --out run
//   beamsim eval       --config configs/default.cfg --scenarios s1,s2,s3 --out run
//   beamsim complexity --spec configs/complexity_table.spec

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "beamsim/complexity.hpp"
#include "beamsim/config.hpp"
#include "beamsim/eval.hpp"

namespace fs = std::filesystem;
using namespace beamsim;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    check(static_cast<bool>(is), "cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    check(static_cast<bool>(os), "cannot open '" + p.string() + "' for writing");
    os << content;
    os.close();
    check(!os.fail(), "failed writing '" + p.string() + "'");
}

/// Git blob id: SHA-1 over "blob <size>\0" + content.
std::string git_blob_hash(const std::string& content) {
    const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    check(EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) == 1, "SHA-1 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        const unsigned char b = md[i];
        out += hex[b >> 4];
        out += hex[b & 15];
    }
    return out;
}

unsigned thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BEAMSIM_THREADS")) {
        const int cap = std::atoi(env);
        check(cap >= 1, "BEAMSIM_THREADS must be a positive integer");
        n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string scenario;
    std::optional<std::size_t> n;
    std::optional<int> epochs;
    std::string topk;
    std::string probe;
    std::string data;
    std::string model;
    std::string scenarios;
    bool fc_baseline = false;
    std::string spec;
};

RunConfig resolve_config(const Options& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.seed) cfg.master_seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.scenario.empty()) cfg.scenario = parse_scenario(o.scenario);
    if (o.n) cfg.n_samples = *o.n;
    if (o.epochs) cfg.train.epochs = *o.epochs;
    if (!o.topk.empty()) set_config_value(cfg, "eval.top_k", o.topk);
    if (!o.probe.empty()) cfg.probe = parse_probe_mode(o.probe);
    cfg.validate();
    return cfg;
}

fs::path out_dir(const RunConfig& cfg) {
    fs::path d(cfg.output_dir);
    fs::create_directories(d);
    return d;
}

fs::path dataset_path(const RunConfig& cfg, ScenarioId s) {
    return fs::path(cfg.output_dir) / ("dataset_" + to_string(s) + ".csv");
}

fs::path manifest_path(const fs::path& csv) {
    fs::path m = csv;
    m.replace_extension(".manifest.json");
    return m;
}

/// Loads a dataset CSV and attaches the codebook fingerprint recorded in
/// its manifest. Without a manifest the fingerprint of the current config
/// is assumed.
Dataset load_dataset(const fs::path& csv, const RunConfig& cfg) {
    Dataset ds = read_dataset_csv(csv.string());
    const fs::path man = manifest_path(csv);
    if (fs::exists(man)) {
        ds.codebook_fingerprint = nlohmann::json::parse(read_file(man)).at("codebook_fingerprint").get<std::string>();
    } else {
        std::cerr << "warning: no manifest next to " << csv << ", using the config's codebook fingerprint\n";
        ds.codebook_fingerprint = setup_fingerprint(make_beam_setup(cfg.sim));
    }
    return ds;
}

int cmd_gen(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    const fs::path dir = out_dir(cfg);
    const BeamSetup beams = make_beam_setup(cfg.sim);
    const Dataset ds = generate_dataset(ScenarioSpec::make(cfg.scenario), cfg.n_samples, cfg.sim,
                                        cfg.master_seed, thread_count(), cfg.split);
    std::ostringstream csv;
    write_dataset_csv(ds, csv);
    const fs::path csv_path = dataset_path(cfg, cfg.scenario);
    write_file(csv_path, csv.str());

    write_file(dir / "codebook_tx_child.json", codebook_to_json(beams.tx.child).dump(1) + "\n");
    write_file(dir / "codebook_tx_parent.json", codebook_to_json(beams.tx.parent).dump(1) + "\n");
    write_file(dir / "codebook_rx_child.json", codebook_to_json(beams.rx.child).dump(1) + "\n");

    nlohmann::json man = {{"dataset", csv_path.filename().string()},
                          {"rows", ds.size()},
                          {"content_hash", git_blob_hash(csv.str())},
                          {"codebook_fingerprint", ds.codebook_fingerprint},
                          {"config", config_to_json(cfg)},
                          {"created_utc", utc_timestamp()}};
    write_file(manifest_path(csv_path), man.dump(2) + "\n");
    std::cout << "wrote " << csv_path.string() << " (" << ds.size() << " rows, hash "
              << man["content_hash"].get<std::string>() << ")\n";
    return 0;
}

int cmd_train(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    const fs::path dir = out_dir(cfg);
    const fs::path data = o.data.empty() ? dataset_path(cfg, cfg.scenario) : fs::path(o.data);
    const Dataset ds = load_dataset(data, cfg);
    const std::string tag = to_string(ds.scenario);
    const auto result = train(ds, cfg.train_config());
    write_file(dir / ("model_" + tag + ".json"), model_to_json(result.model).dump(1) + "\n");
    std::ostringstream hist;
    write_history_csv(result.history, hist);
    write_file(dir / ("history_" + tag + ".csv"), hist.str());
    const auto& last = result.history.back();
    std::cout << "trained " << result.history.size() << " epochs, val top-1 " << format_g(last.val_top1, 4)
              << "\n";
    return 0;
}

std::vector<bool> probe_settings(ProbeMode m) {
    if (m == ProbeMode::Both) return {false, true};
    return {m == ProbeMode::On};
}

nlohmann::json report_bundle(const std::vector<KpiReport>& rows, const RunConfig& cfg,
                             const std::vector<std::pair<std::string, std::string>>& inputs) {
    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["inputs"] = nlohmann::json::object();
    for (const auto& [name, hash] : inputs) j["inputs"][name] = hash;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) j["rows"].push_back(to_json(r));
    return j;
}

int cmd_eval_suite(const Options& o, const RunConfig& cfg) {
    const fs::path dir = out_dir(cfg);
    std::vector<Dataset> datasets;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::stringstream ss(o.scenarios);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const ScenarioId id = parse_scenario(item);
        const fs::path p = o.data.empty() ? dataset_path(cfg, id) : fs::path(o.data) / dataset_path(cfg, id).filename();
        datasets.push_back(load_dataset(p, cfg));
        check(datasets.back().scenario == id, "dataset " + p.string() + " does not hold scenario " + item);
        inputs.emplace_back(p.filename().string(), git_blob_hash(read_file(p)));
    }
    const OverheadCounts counts = OverheadCounts::from(make_beam_setup(cfg.sim));
    std::vector<KpiReport> rows;
    SuiteReport suite;
    for (bool probe : probe_settings(cfg.probe)) {
        suite = run_scenario_suite(datasets, cfg.train_config(), cfg.top_k, probe, counts);
        rows.insert(rows.end(), suite.rows.begin(), suite.rows.end());
    }
    std::ostringstream csv;
    write_kpi_csv(rows, csv);
    write_file(dir / "suite.csv", csv.str());
    nlohmann::json j = report_bundle(rows, cfg, inputs);
    j["top1_error"] = nlohmann::json::object();
    for (const auto& [id, err] : suite.top1_error) j["top1_error"][to_string(id)] = err;
    j["ordering_s2_s3_s1"] = suite.ordering_holds;
    write_file(dir / "suite.json", j.dump(2) + "\n");
    std::cout << csv.str();
    if (suite.top1_error.size() == 3)
        std::cout << "ordering error(s2) > error(s3) > error(s1): " << (suite.ordering_holds ? "holds" : "violated")
                  << "\n";
    return 0;
}

int cmd_eval(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    if (!o.scenarios.empty()) return cmd_eval_suite(o, cfg);
    const fs::path dir = out_dir(cfg);
    const fs::path data = o.data.empty() ? dataset_path(cfg, cfg.scenario) : fs::path(o.data);
    const Dataset ds = load_dataset(data, cfg);
    const std::string tag = to_string(ds.scenario);
    const fs::path model_path = o.model.empty() ? dir / ("model_" + tag + ".json") : fs::path(o.model);
    const std::string model_text = read_file(model_path);
    const LinearSoftmaxModel model = model_from_json(nlohmann::json::parse(model_text));

    const BeamSetup beams = make_beam_setup(cfg.sim);
    const OverheadCounts counts = OverheadCounts::from(beams);
    std::vector<KpiReport> rows = evaluate_baselines(ds, beams.tx, counts);
    for (bool probe : probe_settings(cfg.probe)) {
        auto ml = evaluate_ml(model, ds, cfg.top_k, probe, counts);
        rows.insert(rows.end(), ml.begin(), ml.end());
    }
    if (o.fc_baseline) {
        const auto fc = train_fc(ds, cfg.fc_hidden, cfg.train_config());
        for (bool probe : probe_settings(cfg.probe)) {
            auto r = evaluate_ml(fc.model, ds, cfg.top_k, probe, counts, "FC-baseline");
            rows.insert(rows.end(), r.begin(), r.end());
        }
    }
    std::ostringstream csv;
    write_kpi_csv(rows, csv);
    write_file(dir / ("report_" + tag + ".csv"), csv.str());
    const nlohmann::json j = report_bundle(
        rows, cfg,
        {{data.filename().string(), git_blob_hash(read_file(data))},
         {model_path.filename().string(), git_blob_hash(model_text)}});
    write_file(dir / ("report_" + tag + ".json"), j.dump(2) + "\n");
    std::ostringstream corr;
    write_correlation_csv(parent_child_correlation(ds), corr);
    write_file(dir / ("correlation_" + tag + ".csv"), corr.str());
    std::cout << csv.str();
    return 0;
}

int cmd_complexity(const Options& o) {
    check(!o.spec.empty(), "complexity: --spec is required");
    std::ifstream is(o.spec);
    check(static_cast<bool>(is), "cannot open spec '" + o.spec + "'");
    const std::string table = render_complexity_table(parse_complexity_spec(is));
    std::cout << table;
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file(fs::path(o.out) / "complexity.csv", table);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmWave beam management simulator and beam predictor"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "key = value config file");
        sub->add_option("--seed", o.seed, "master seed (overrides the config)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--scenario", o.scenario, "s1, s2 or s3")->check(CLI::IsMember({"s1", "s2", "s3"}));
    };
    auto* gen = app.add_subcommand("gen", "simulate a labeled dataset");
    add_common(gen);
    gen->add_option("--n", o.n, "number of samples");

    auto* tr = app.add_subcommand("train", "train the linear-softmax predictor");
    add_common(tr);
    tr->add_option("--data", o.data, "dataset CSV (default <out>/dataset_<scenario>.csv)");
    tr->add_option("--epochs", o.epochs, "training epochs");

    auto* ev = app.add_subcommand("eval", "compute KPI reports");
    add_common(ev);
    ev->add_option("--data", o.data, "dataset CSV, or the dataset directory with --scenarios");
    ev->add_option("--model", o.model, "model JSON (default <out>/model_<scenario>.json)");
    ev->add_option("--topk", o.topk, "comma-separated K list");
    ev->add_option("--probe-confirm", o.probe, "true, false or both");
    ev->add_option("--scenarios", o.scenarios, "train and evaluate each listed scenario, e.g. s1,s2,s3");
    ev->add_option("--epochs", o.epochs, "training epochs for --scenarios and --fc-baseline");
    ev->add_flag("--fc-baseline", o.fc_baseline, "also train and report the FC baseline");

    auto* cx = app.add_subcommand("complexity", "render a complexity table");
    cx->add_option("--spec", o.spec, "layer spec file")->required();
    cx->add_option("--out", o.out, "also write complexity.csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (gen->parsed()) return cmd_gen(o);
        if (tr->parsed()) return cmd_train(o);
        if (ev->parsed()) return cmd_eval(o);
        return cmd_complexity(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

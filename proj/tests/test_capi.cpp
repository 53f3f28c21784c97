#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "mapos.h"

namespace {

std::string tmp(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// small but complete scenario shared by the C API tests
const char* kTinyConfig = R"(
[scenario]
nlos_paths = 2
mc_samples = 4

[swarm]
particles = 8
iterations = 6

[trajectories]
slots = 120

[model]
t_hist_win = 6
t_pre = 4
lstm_hidden = 4
d_model = 8
heads = 2
bilstm_hidden = 4
epochs = 6
train_stride = 1

[eval]
horizons = 2 4
replay_slots = 4
timing_runs = 10

[run]
seed = 7
threads = 2
)";

} // namespace

TEST_CASE("config handles: defaults, parse errors, overrides") {
    mapos_config* cfg = nullptr;
    REQUIRE(mapos_config_default(&cfg) == MAPOS_OK);
    REQUIRE(cfg != nullptr);
    CHECK(mapos_config_override_seed(cfg, 1234) == MAPOS_OK);
    CHECK(mapos_config_override_threads(cfg, 2) == MAPOS_OK);
    CHECK(mapos_config_override_model_kind(cfg, "narx") == MAPOS_OK);
    CHECK(mapos_config_override_model_kind(cfg, "alexnet") == MAPOS_ERR_CONFIG);
    CHECK(std::string(mapos_last_error()).find("alexnet") != std::string::npos);
    mapos_config_free(cfg);

    mapos_config* bad = nullptr;
    CHECK(mapos_config_parse("[swarm]\npartcles = 3\n", &bad) == MAPOS_ERR_CONFIG);
    CHECK(std::string(mapos_last_error()).find("particles") != std::string::npos);

    CHECK(mapos_config_load("/nonexistent/path.ini", &bad) == MAPOS_ERR_IO);
}

TEST_CASE("full pipeline through the C surface" * doctest::timeout(600)) {
    mapos_config* cfg = nullptr;
    REQUIRE(mapos_config_parse(kTinyConfig, &cfg) == MAPOS_OK);

    const std::string ds_path = tmp("mapos_capi.mapd");
    const std::string model_path = tmp("mapos_capi.mapw");
    const std::string log_path = tmp("mapos_capi_log.csv");
    const std::string eval_dir = tmp("mapos_capi_eval");
    const std::string report_dir = tmp("mapos_capi_report");

    REQUIRE(mapos_gen_data(cfg, ds_path.c_str(), 0) == MAPOS_OK);

    mapos_dataset* ds = nullptr;
    REQUIRE(mapos_dataset_load(ds_path.c_str(), &ds) == MAPOS_OK);
    int slots = 0;
    size_t antennas = 0;
    CHECK(mapos_dataset_slots(ds, &slots) == MAPOS_OK);
    CHECK(mapos_dataset_antennas(ds, &antennas) == MAPOS_OK);
    CHECK(slots == 120);
    CHECK(antennas == 9);
    double secrecy = -1.0;
    CHECK(mapos_dataset_secrecy(ds, 3, &secrecy) == MAPOS_OK);
    CHECK(secrecy >= 0.0);
    std::vector<double> layout(3 * antennas);
    CHECK(mapos_dataset_layout(ds, 3, layout.data(), layout.size()) == MAPOS_OK);
    CHECK(mapos_dataset_layout(ds, 3, layout.data(), 5) == MAPOS_ERR_CONFIG);
    CHECK(mapos_dataset_secrecy(ds, 500, &secrecy) == MAPOS_ERR_CONFIG);

    REQUIRE(mapos_train(cfg, ds_path.c_str(), model_path.c_str(), log_path.c_str(), 0) ==
            MAPOS_OK);

    mapos_model* model = nullptr;
    REQUIRE(mapos_model_load(model_path.c_str(), &model) == MAPOS_OK);
    char kind[16];
    CHECK(mapos_model_kind(model, kind, sizeof(kind)) == MAPOS_OK);
    CHECK(std::string(kind) == "proposed");
    int t_hist = 0, t_pre = 0;
    size_t m_ant = 0;
    CHECK(mapos_model_geometry(model, &t_hist, &t_pre, &m_ant) == MAPOS_OK);
    CHECK(t_hist == 6);
    CHECK(t_pre == 4);
    CHECK(m_ant == 9);

    // predict from the first t_hist dataset layouts (meters in, meters out)
    std::vector<double> history;
    for (int t = 0; t < t_hist; ++t) {
        std::vector<double> xyz(3 * m_ant);
        REQUIRE(mapos_dataset_layout(ds, t, xyz.data(), xyz.size()) == MAPOS_OK);
        history.insert(history.end(), xyz.begin(), xyz.end());
    }
    std::vector<double> pred(static_cast<size_t>(t_pre) * m_ant * 3);
    REQUIRE(mapos_model_predict(model, history.data(), history.size(), pred.data(),
                                pred.size()) == MAPOS_OK);
    for (double v : pred) CHECK(std::isfinite(v));
    CHECK(mapos_model_predict(model, history.data(), history.size() - 1, pred.data(),
                              pred.size()) == MAPOS_ERR_CONFIG);

    const char* models[] = {model_path.c_str()};
    REQUIRE(mapos_eval(cfg, ds_path.c_str(), models, 1, eval_dir.c_str()) == MAPOS_OK);
    REQUIRE(mapos_report(eval_dir.c_str(), report_dir.c_str()) == MAPOS_OK);
    CHECK(std::filesystem::exists(report_dir + "/manifest.csv"));

    mapos_model_free(model);
    mapos_dataset_free(ds);
    mapos_config_free(cfg);

    std::filesystem::remove(ds_path);
    std::filesystem::remove(model_path);
    std::filesystem::remove(log_path);
    std::filesystem::remove_all(eval_dir);
    std::filesystem::remove_all(report_dir);
}

TEST_CASE("status codes map error categories") {
    CHECK(mapos_report("/nonexistent_eval_dir", "/tmp/mapos_never") == MAPOS_ERR_IO);

    mapos_config* cfg = nullptr;
    REQUIRE(mapos_config_default(&cfg) == MAPOS_OK);
    CHECK(mapos_optimize_slot(cfg, -1, nullptr, tmp("x.csv").c_str()) == MAPOS_ERR_CONFIG);
    CHECK(mapos_gen_data(nullptr, "x", 0) == MAPOS_ERR_CONFIG);
    mapos_config_free(cfg);
}

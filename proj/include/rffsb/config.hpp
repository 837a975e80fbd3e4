#pragma once
// Run configuration: scale presets, flat key/value config files with nested
// channel-profile tables, and the resolved-config echo.  Unknown keys are
// rejected; every run can be reconstructed from the echo alone.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "rffsb/channel.hpp"
#include "rffsb/clps.hpp"
#include "rffsb/frame.hpp"
#include "rffsb/models.hpp"

namespace rffsb {

struct RunConfig {
    std::uint64_t master_seed = 1234;
    std::string scale = "desk";
    std::string out_dir;          // resolved later (flag > file > env > default)
    int threads = 1;

    FrameSpec frame;
    FleetSpec fleet;
    ClpsSpec clps;

    // Scenario
    std::size_t frames_train = 500, frames_test = 50;
    std::string train_profile = "default";
    std::string test_profile = "default";
    std::vector<int> targets = {1, 4, 7};

    // Classifier training
    std::size_t cls_epochs = 10, cls_batch = 64;
    double cls_lr = 1e-3;
    std::size_t cls_width = 16;

    // VAE / attack training
    std::size_t vae_latent = 128, vae_width = 16;
    std::size_t attack_steps = 500, attack_batch = 8;
    double attack_lr = 1e-3;
    std::size_t template_bank = 64;
    std::size_t attack_eval_every = 100, attack_eval_frames = 32;
    std::size_t attack_patience = 250;   // steps without colluder ASR gain

    nn::LossWeights loss;

    // Evaluation
    std::size_t eval_frames = 100;
    std::vector<double> sweep_ebn0 = {-20, -10, -5, 0, 5, 10, 20, 30};
    std::vector<double> sweep_k = {0, 2, 5, 8, 10};
    std::vector<std::string> sweep_profiles = {"indoor_a", "indoor_b",
                                               "vehicular_a"};
    std::vector<std::string> matrix_profiles = {"awgn", "indoor_a", "indoor_b",
                                                "vehicular_a"};

    // Raw-I/Q ablation (reduced budget; it only needs to demonstrate failure)
    std::size_t rawiq_frames_train = 200, rawiq_epochs = 5, rawiq_steps = 300;

    std::map<std::string, ChannelProfile> profiles;

    RunConfig() {
        for (const auto& n : builtin_profile_names())
            profiles[n] = builtin_profile(n);
    }

    void apply_scale(const std::string& s) {
        scale = s;
        if (s == "desk") {
            frames_train = 500; frames_test = 50;
            cls_epochs = 10;
            attack_steps = 500;
            eval_frames = 100;
            targets = {1, 4, 7};
        } else if (s == "paper") {
            frames_train = 5000; frames_test = 500;
            cls_epochs = 20;
            attack_steps = 5000;
            eval_frames = 500;
            targets.clear();
            for (int d = 0; d < fleet.n_legit; ++d) targets.push_back(d);
        } else {
            throw ConfigError("unknown scale: " + s + " (desk|paper)");
        }
    }

    const ChannelProfile& profile(const std::string& name) const {
        auto it = profiles.find(name);
        if (it == profiles.end())
            throw ConfigError("unknown channel profile: " + name);
        return it->second;
    }

    void validate() const {
        if (frames_train < 1 || frames_test < 1)
            throw ConfigError("frames per device must be >= 1");
        if (fleet.n_legit < 1) throw ConfigError("need at least one device");
        for (int t : targets)
            if (t < 0 || t >= fleet.n_legit)
                throw ConfigError("target id out of range: " + std::to_string(t));
        profile(train_profile);
        profile(test_profile);
        for (const auto& n : sweep_profiles) profile(n);
        for (const auto& n : matrix_profiles) profile(n);
        loss.validate();
        clps.resolve_fft(frame.n_samples());
        if (threads < 1) throw ConfigError("threads must be >= 1");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["master_seed"] = master_seed;
        j["scale"] = scale;
        j["out_dir"] = out_dir;
        j["threads"] = threads;
        j["frame"] = {{"oversample", frame.oversample},
                      {"n_symbols", frame.n_symbols},
                      {"chip_rate", frame.chip_rate},
                      {"bit_rate", frame.bit_rate},
                      {"n_samples", frame.n_samples()},
                      {"sample_rate", frame.sample_rate()}};
        j["fleet"] = {{"n_legit", fleet.n_legit},
                      {"gain_lo", fleet.gain_lo}, {"gain_hi", fleet.gain_hi},
                      {"phase_lo_deg", fleet.phase_lo_deg},
                      {"phase_hi_deg", fleet.phase_hi_deg}};
        j["clps"] = {{"fft_size", clps.resolve_fft(frame.n_samples())},
                     {"band_bins", clps.band_bins},
                     {"feature_len", clps.feature_len},
                     {"eps", clps.eps}};
        j["scenario"] = {{"frames_train", frames_train},
                         {"frames_test", frames_test},
                         {"train_profile", train_profile},
                         {"test_profile", test_profile},
                         {"targets", targets}};
        j["classifier"] = {{"epochs", cls_epochs}, {"batch", cls_batch},
                           {"lr", cls_lr}, {"width", cls_width}};
        j["attack"] = {{"vae_latent", vae_latent}, {"vae_width", vae_width},
                       {"steps", attack_steps}, {"batch", attack_batch},
                       {"lr", attack_lr}, {"template_bank", template_bank},
                       {"eval_every", attack_eval_every},
                       {"eval_frames", attack_eval_frames},
                       {"patience", attack_patience}};
        j["loss_weights"] = {{"recon", loss.recon}, {"kl", loss.kl},
                             {"clps", loss.clps}, {"cls", loss.cls}};
        j["eval"] = {{"eval_frames", eval_frames},
                     {"sweep_ebn0", sweep_ebn0}, {"sweep_k", sweep_k},
                     {"sweep_profiles", sweep_profiles},
                     {"matrix_profiles", matrix_profiles}};
        j["rawiq"] = {{"frames_train", rawiq_frames_train},
                      {"epochs", rawiq_epochs}, {"steps", rawiq_steps}};
        nlohmann::json profs = nlohmann::json::object();
        for (const auto& [name, p] : profiles) {
            profs[name] = {{"delays_ns", p.delays_ns}, {"gains_db", p.gains_db},
                           {"k_factor", std::isinf(p.k_factor)
                                            ? nlohmann::json("inf")
                                            : nlohmann::json(p.k_factor)},
                           {"doppler_hz", p.doppler_hz},
                           {"ebn0_db", p.ebn0_db}};
        }
        j["profiles"] = profs;
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_num(const std::string& key, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": " + v);
    }
}

inline std::vector<double> parse_num_list(const std::string& key,
                                          const std::string& v) {
    std::vector<double> out;
    for (const auto& p : split_csv(v)) out.push_back(parse_num(key, p));
    return out;
}

}  // namespace detail

// Flat `key = value` lines; `[profile.NAME]` sections define or override
// channel profiles.  Unknown keys are an error.
inline void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path.string());

    std::string cur_profile;
    std::string line;
    int lineno = 0;
    // `scale` must apply before other keys so file overrides survive the
    // preset; collect pairs first.
    std::vector<std::tuple<std::string, std::string, std::string>> pairs;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: bad section at line " +
                                  std::to_string(lineno));
            const std::string sec = detail::trim(line.substr(1, line.size() - 2));
            if (sec.rfind("profile.", 0) != 0)
                throw ConfigError("config: unknown section [" + sec + "]");
            cur_profile = sec.substr(8);
            if (cur_profile.empty())
                throw ConfigError("config: empty profile name at line " +
                                  std::to_string(lineno));
            if (!cfg.profiles.count(cur_profile)) {
                ChannelProfile p;
                p.name = cur_profile;
                p.delays_ns = {0};
                p.gains_db = {0};
                cfg.profiles[cur_profile] = p;
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " +
                              std::to_string(lineno));
        pairs.emplace_back(cur_profile, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }

    using detail::parse_num;
    using detail::parse_num_list;

    for (auto& [prof, key, val] : pairs)
        if (prof.empty() && key == "scale") cfg.apply_scale(val);

    for (auto& [prof, key, val] : pairs) {
        if (!prof.empty()) {
            ChannelProfile& p = cfg.profiles[prof];
            if (key == "delays_ns") p.delays_ns = parse_num_list(key, val);
            else if (key == "gains_db") p.gains_db = parse_num_list(key, val);
            else if (key == "k_factor") p.k_factor = parse_num(key, val);
            else if (key == "doppler_hz") p.doppler_hz = parse_num(key, val);
            else if (key == "ebn0_db") p.ebn0_db = parse_num(key, val);
            else
                throw ConfigError("config: unknown profile key " + key);
            continue;
        }
        if (key == "scale") continue;   // already applied
        else if (key == "master_seed")
            cfg.master_seed = static_cast<std::uint64_t>(
                std::stoull(val));
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "threads") cfg.threads = static_cast<int>(parse_num(key, val));
        else if (key == "n_devices") cfg.fleet.n_legit = static_cast<int>(parse_num(key, val));
        else if (key == "gain_lo") cfg.fleet.gain_lo = parse_num(key, val);
        else if (key == "gain_hi") cfg.fleet.gain_hi = parse_num(key, val);
        else if (key == "phase_lo_deg") cfg.fleet.phase_lo_deg = parse_num(key, val);
        else if (key == "phase_hi_deg") cfg.fleet.phase_hi_deg = parse_num(key, val);
        else if (key == "oversample") cfg.frame.oversample = static_cast<int>(parse_num(key, val));
        else if (key == "n_symbols") cfg.frame.n_symbols = static_cast<int>(parse_num(key, val));
        else if (key == "chip_rate") cfg.frame.chip_rate = parse_num(key, val);
        else if (key == "bit_rate") cfg.frame.bit_rate = parse_num(key, val);
        else if (key == "fft_size") cfg.clps.fft_size = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "band_bins") cfg.clps.band_bins = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "feature_len") cfg.clps.feature_len = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "clps_eps") cfg.clps.eps = parse_num(key, val);
        else if (key == "frames_train") cfg.frames_train = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "frames_test") cfg.frames_test = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "train_profile") cfg.train_profile = val;
        else if (key == "test_profile") cfg.test_profile = val;
        else if (key == "targets") {
            cfg.targets.clear();
            for (double d : parse_num_list(key, val))
                cfg.targets.push_back(static_cast<int>(d));
        }
        else if (key == "cls_epochs") cfg.cls_epochs = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "cls_batch") cfg.cls_batch = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "cls_lr") cfg.cls_lr = parse_num(key, val);
        else if (key == "cls_width") cfg.cls_width = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "vae_latent") cfg.vae_latent = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "vae_width") cfg.vae_width = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "attack_steps") cfg.attack_steps = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "attack_batch") cfg.attack_batch = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "attack_lr") cfg.attack_lr = parse_num(key, val);
        else if (key == "template_bank") cfg.template_bank = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "attack_eval_every") cfg.attack_eval_every = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "attack_eval_frames") cfg.attack_eval_frames = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "attack_patience") cfg.attack_patience = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "lambda_recon") cfg.loss.recon = parse_num(key, val);
        else if (key == "lambda_kl") cfg.loss.kl = parse_num(key, val);
        else if (key == "lambda_clps") cfg.loss.clps = parse_num(key, val);
        else if (key == "lambda_cls") cfg.loss.cls = parse_num(key, val);
        else if (key == "eval_frames") cfg.eval_frames = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "sweep_ebn0") cfg.sweep_ebn0 = parse_num_list(key, val);
        else if (key == "sweep_k") cfg.sweep_k = parse_num_list(key, val);
        else if (key == "sweep_profiles") cfg.sweep_profiles = detail::split_csv(val);
        else if (key == "matrix_profiles") cfg.matrix_profiles = detail::split_csv(val);
        else if (key == "rawiq_frames_train") cfg.rawiq_frames_train = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "rawiq_epochs") cfg.rawiq_epochs = static_cast<std::size_t>(parse_num(key, val));
        else if (key == "rawiq_steps") cfg.rawiq_steps = static_cast<std::size_t>(parse_num(key, val));
        else
            throw ConfigError("config: unknown key " + key);
    }
}

// Resolve the output directory: flag > config file > RFFSB_OUT > ./rffsb_out.
inline std::filesystem::path resolve_out_dir(
    const RunConfig& cfg, const std::optional<std::string>& flag_out,
    const std::optional<std::filesystem::path>& config_dir) {
    if (flag_out) return *flag_out;
    if (!cfg.out_dir.empty()) {
        std::filesystem::path p = cfg.out_dir;
        if (p.is_relative() && config_dir) p = *config_dir / p;
        return p;
    }
    if (const char* env = std::getenv("RFFSB_OUT")) return env;
    return "rffsb_out";
}

}  // namespace rffsb

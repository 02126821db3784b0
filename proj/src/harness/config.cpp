#include "spikegrasp/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "spikegrasp/kernels.hpp"

namespace spikegrasp::harness {
namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt_vec3(const Vec3& v) {
  return fmt_double(v.x) + " " + fmt_double(v.y) + " " + fmt_double(v.z);
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  // Returns false on a malformed value.
  std::function<bool(RunConfig&, const std::string&)> set;
};

bool parse_full_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::logic_error&) {
    return false;
  }
}

bool parse_full_int(const std::string& s, int& out) {
  try {
    std::size_t pos = 0;
    out = std::stoi(s, &pos);
    return pos == s.size();
  } catch (const std::logic_error&) {
    return false;
  }
}

bool parse_full_i64(const std::string& s, std::int64_t& out) {
  try {
    std::size_t pos = 0;
    out = static_cast<std::int64_t>(std::stoll(s, &pos));
    return pos == s.size();
  } catch (const std::logic_error&) {
    return false;
  }
}

bool parse_full_u64(const std::string& s, std::uint64_t& out) {
  try {
    std::size_t pos = 0;
    out = std::stoull(s, &pos);
    return pos == s.size() && s.find('-') == std::string::npos;
  } catch (const std::logic_error&) {
    return false;
  }
}

bool parse_vec3(const std::string& s, Vec3& out) {
  std::istringstream ss(s);
  std::string a, b, c, extra;
  if (!(ss >> a >> b >> c) || (ss >> extra)) return false;
  return parse_full_double(a, out.x) && parse_full_double(b, out.y) &&
         parse_full_double(c, out.z);
}

Field fd(std::string key, double RunConfig::* ptr) {
  return {std::move(key),
          [ptr](const RunConfig& c) { return fmt_double(c.*ptr); },
          [ptr](RunConfig& c, const std::string& v) {
            return parse_full_double(v, c.*ptr);
          }};
}

Field fi(std::string key, int RunConfig::* ptr) {
  return {std::move(key), [ptr](const RunConfig& c) { return std::to_string(c.*ptr); },
          [ptr](RunConfig& c, const std::string& v) {
            return parse_full_int(v, c.*ptr);
          }};
}

template <typename Sub>
Field fd_sub(std::string key, Sub RunConfig::* sub, double Sub::* ptr) {
  return {std::move(key),
          [sub, ptr](const RunConfig& c) { return fmt_double(c.*sub.*ptr); },
          [sub, ptr](RunConfig& c, const std::string& v) {
            return parse_full_double(v, c.*sub.*ptr);
          }};
}

template <typename Sub>
Field fi_sub(std::string key, Sub RunConfig::* sub, int Sub::* ptr) {
  return {std::move(key),
          [sub, ptr](const RunConfig& c) { return std::to_string(c.*sub.*ptr); },
          [sub, ptr](RunConfig& c, const std::string& v) {
            return parse_full_int(v, c.*sub.*ptr);
          }};
}

template <typename Sub>
Field fv_sub(std::string key, Sub RunConfig::* sub, Vec3 Sub::* ptr) {
  return {std::move(key),
          [sub, ptr](const RunConfig& c) { return fmt_vec3(c.*sub.*ptr); },
          [sub, ptr](RunConfig& c, const std::string& v) {
            return parse_vec3(v, c.*sub.*ptr);
          }};
}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back({"seed",
                 [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) {
                   return parse_full_u64(v, c.seed);
                 }});
    f.push_back({"model",
                 [](const RunConfig& c) { return snn::model_name(c.model); },
                 [](RunConfig& c, const std::string& v) {
                   return snn::parse_model(v, c.model);
                 }});
    f.push_back({"mode",
                 [](const RunConfig& c) { return env::mode_name(c.mode); },
                 [](RunConfig& c, const std::string& v) {
                   return env::parse_mode(v, c.mode);
                 }});
    f.push_back({"kernels",
                 [](const RunConfig& c) { return c.kernels; },
                 [](RunConfig& c, const std::string& v) {
                   kern::Backend b;
                   if (v != "auto" && !kern::parse_backend(v, b)) return false;
                   c.kernels = v;
                   return true;
                 }});
    f.push_back(fi("updates", &RunConfig::updates));
    f.push_back(fi("envs", &RunConfig::num_envs));

    f.push_back(fi("eval.envs", &RunConfig::eval_envs));
    f.push_back(fi("eval.interval", &RunConfig::eval_interval));
    f.push_back(fi("eval.episodes", &RunConfig::eval_episodes));
    f.push_back(fi("eval.trials", &RunConfig::eval_trials));

    auto e = &RunConfig::env;
    f.push_back(fd_sub("env.dt", e, &env::EnvConfig::dt));
    f.push_back(fi_sub("env.substeps", e, &env::EnvConfig::substeps));
    f.push_back(fi_sub("env.episode_len", e, &env::EnvConfig::episode_len));
    f.push_back(fv_sub("env.workspace_min", e, &env::EnvConfig::workspace_min));
    f.push_back(fv_sub("env.workspace_max", e, &env::EnvConfig::workspace_max));
    f.push_back(fv_sub("env.spawn_min", e, &env::EnvConfig::spawn_min));
    f.push_back(fv_sub("env.spawn_max", e, &env::EnvConfig::spawn_max));
    f.push_back(fv_sub("env.home_pos", e, &env::EnvConfig::home_pos));
    f.push_back(fd_sub("env.home_gap", e, &env::EnvConfig::home_gap));
    f.push_back(fd_sub("env.gap_min", e, &env::EnvConfig::gap_min));
    f.push_back(fd_sub("env.gap_max", e, &env::EnvConfig::gap_max));
    f.push_back(fd_sub("env.pitch_limit", e, &env::EnvConfig::pitch_limit));
    f.push_back(fd_sub("env.side_min", e, &env::EnvConfig::side_min));
    f.push_back(fd_sub("env.side_max", e, &env::EnvConfig::side_max));
    f.push_back(fd_sub("env.object_mass", e, &env::EnvConfig::object_mass));
    f.push_back(fd_sub("env.drag", e, &env::EnvConfig::drag));
    f.push_back(fd_sub("env.contact_kp", e, &env::EnvConfig::contact_kp));
    f.push_back(fd_sub("env.contact_kd", e, &env::EnvConfig::contact_kd));
    f.push_back(fd_sub("env.finger_radius", e, &env::EnvConfig::finger_radius));
    f.push_back(fd_sub("env.max_speed", e, &env::EnvConfig::max_speed));
    f.push_back(fd_sub("env.max_rot_rate", e, &env::EnvConfig::max_rot_rate));
    f.push_back(fd_sub("env.max_gap_rate", e, &env::EnvConfig::max_gap_rate));
    f.push_back(fd_sub("env.pos_scale", e, &env::EnvConfig::pos_scale));
    f.push_back(fd_sub("env.rel_scale", e, &env::EnvConfig::rel_scale));
    f.push_back(fd_sub("env.vel_scale", e, &env::EnvConfig::vel_scale));
    f.push_back(fd_sub("env.force_scale", e, &env::EnvConfig::force_scale));

    auto r = &RunConfig::reward;
    f.push_back(fd_sub("reward.alpha1", r, &rew::RewardParams::alpha1));
    f.push_back(fd_sub("reward.alpha2", r, &rew::RewardParams::alpha2));
    f.push_back(fd_sub("reward.alpha3", r, &rew::RewardParams::alpha3));
    f.push_back(fd_sub("reward.alpha4", r, &rew::RewardParams::alpha4));
    f.push_back(fd_sub("reward.alpha5", r, &rew::RewardParams::alpha5));
    f.push_back(fd_sub("reward.alpha8", r, &rew::RewardParams::alpha8));
    f.push_back(fd_sub("reward.alpha9", r, &rew::RewardParams::alpha9));
    f.push_back(fd_sub("reward.lambda1", r, &rew::RewardParams::lambda1));
    f.push_back(fd_sub("reward.lambda2", r, &rew::RewardParams::lambda2));
    f.push_back(fd_sub("reward.lambda3", r, &rew::RewardParams::lambda3));
    f.push_back(fd_sub("reward.lambda4", r, &rew::RewardParams::lambda4));
    f.push_back(fd_sub("reward.lambda5", r, &rew::RewardParams::lambda5));
    f.push_back(fd_sub("reward.lambda6", r, &rew::RewardParams::lambda6));
    f.push_back(fd_sub("reward.lambda7", r, &rew::RewardParams::lambda7));
    f.push_back(fd_sub("reward.gamma1", r, &rew::RewardParams::gamma1));
    f.push_back(fd_sub("reward.gamma2", r, &rew::RewardParams::gamma2));
    f.push_back(fd_sub("reward.delta1", r, &rew::RewardParams::delta1));
    f.push_back(fd_sub("reward.delta2", r, &rew::RewardParams::delta2));
    f.push_back(fd_sub("reward.delta3", r, &rew::RewardParams::delta3));
    f.push_back(fd_sub("reward.epsilon", r, &rew::RewardParams::epsilon));
    f.push_back(fd_sub("reward.h1", r, &rew::RewardParams::h1));
    f.push_back(fd_sub("reward.h2", r, &rew::RewardParams::h2));
    f.push_back(fd_sub("reward.f_tol", r, &rew::RewardParams::f_tol));
    f.push_back(fd_sub("reward.time_penalty", r, &rew::RewardParams::time_penalty));

    auto cu = &RunConfig::curriculum;
    f.push_back(fd_sub("curriculum.advance_threshold", cu,
                       &rew::CurriculumConfig::advance_threshold));
    f.push_back(fi_sub("curriculum.window", cu, &rew::CurriculumConfig::window));
    f.push_back(
        fi_sub("curriculum.min_updates", cu, &rew::CurriculumConfig::min_updates));
    f.push_back(fi_sub("curriculum.tactile_handover", cu,
                       &rew::CurriculumConfig::tactile_handover));

    auto p = &RunConfig::ppo;
    f.push_back(fd_sub("ppo.discount", p, &ppo::PpoConfig::discount));
    f.push_back(fd_sub("ppo.gae_lambda", p, &ppo::PpoConfig::gae_lambda));
    f.push_back(fd_sub("ppo.clip_ratio", p, &ppo::PpoConfig::clip_ratio));
    f.push_back(fi_sub("ppo.epochs", p, &ppo::PpoConfig::epochs));
    f.push_back(fi_sub("ppo.minibatch", p, &ppo::PpoConfig::minibatch));
    f.push_back(fd_sub("ppo.learning_rate", p, &ppo::PpoConfig::learning_rate));
    f.push_back(fd_sub("ppo.value_coef", p, &ppo::PpoConfig::value_coef));
    f.push_back(fd_sub("ppo.entropy_coef", p, &ppo::PpoConfig::entropy_coef));
    f.push_back(fd_sub("ppo.max_grad_norm", p, &ppo::PpoConfig::max_grad_norm));
    f.push_back(fi_sub("ppo.horizon", p, &ppo::PpoConfig::horizon));
    f.push_back(fd_sub("ppo.value_scale", p, &ppo::PpoConfig::value_scale));
    f.push_back(fd_sub("ppo.log_std_min", p, &ppo::PpoConfig::log_std_min));
    f.push_back(fd_sub("ppo.log_std_max", p, &ppo::PpoConfig::log_std_max));
    f.push_back(fd_sub("ppo.reward_floor", p, &ppo::PpoConfig::reward_floor));
    f.push_back(fd_sub("ppo.target_kl", p, &ppo::PpoConfig::target_kl));
    f.push_back(fd_sub("ppo.entropy_final", p, &ppo::PpoConfig::entropy_final));
    f.push_back(fd_sub("ppo.lr_final", p, &ppo::PpoConfig::lr_final));
    f.push_back(fd_sub("ppo.sigma_final", p, &ppo::PpoConfig::sigma_final));

    f.push_back(fi("snn.hidden", &RunConfig::snn_hidden));
    f.push_back(fi("snn.window", &RunConfig::snn_window));
    f.push_back(fd("snn.hidden_decay", &RunConfig::hidden_decay));
    f.push_back(fd("snn.hidden_threshold", &RunConfig::hidden_threshold));
    f.push_back(fd("snn.output_decay", &RunConfig::output_decay));
    f.push_back(fd("snn.surrogate_alpha", &RunConfig::surrogate_alpha));
    f.push_back(fd("snn.log_std_init", &RunConfig::log_std_init));
    f.push_back({"snn.reset",
                 [](const RunConfig& c) { return c.reset; },
                 [](RunConfig& c, const std::string& v) {
                   if (v != "to-zero" && v != "subtract") return false;
                   c.reset = v;
                   return true;
                 }});

    f.push_back({"energy.batch",
                 [](const RunConfig& c) { return std::to_string(c.energy_batch); },
                 [](RunConfig& c, const std::string& v) {
                   return parse_full_i64(v, c.energy_batch);
                 }});
    f.push_back(fi("energy.window", &RunConfig::energy_window));
    f.push_back({"energy.mult_pj",
                 [](const RunConfig& c) { return fmt_double(c.costs.mult_pj); },
                 [](RunConfig& c, const std::string& v) {
                   return parse_full_double(v, c.costs.mult_pj);
                 }});
    f.push_back({"energy.add_pj",
                 [](const RunConfig& c) { return fmt_double(c.costs.add_pj); },
                 [](RunConfig& c, const std::string& v) {
                   return parse_full_double(v, c.costs.add_pj);
                 }});
    return f;
  }();
  return fields;
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

snn::LifParams RunConfig::hidden_params() const {
  snn::LifParams p;
  p.decay = hidden_decay;
  p.threshold = hidden_threshold;
  p.reset = reset == "subtract" ? kern::Reset::SubtractThreshold
                                : kern::Reset::ToZero;
  return p;
}

snn::LifParams RunConfig::output_params() const {
  snn::LifParams p;
  p.decay = output_decay;
  p.threshold = hidden_threshold;  // unused by the readout
  p.reset = kern::Reset::ToZero;
  return p;
}

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { throw ConfigError("config: " + what); };
  try {
    env.validate();
    reward.validate();
    curriculum.validate();
    ppo.validate();
  } catch (const std::invalid_argument& err) {
    bad(err.what());
  }
  if (updates < 1) bad("updates must be >= 1");
  if (num_envs < 1) bad("envs must be >= 1");
  if (eval_envs < 1) bad("eval.envs must be >= 1");
  if (eval_interval < 1) bad("eval.interval must be >= 1");
  if (eval_episodes < 1) bad("eval.episodes must be >= 1");
  if (eval_trials < 1) bad("eval.trials must be >= 1");
  if (snn_hidden < 1) bad("snn.hidden must be >= 1");
  if (snn_window < 1) bad("snn.window must be >= 1");
  if (!(hidden_decay >= 0.0 && hidden_decay <= 1.0)) {
    bad("snn.hidden_decay must be in [0, 1]");
  }
  if (!(output_decay >= 0.0 && output_decay <= 1.0)) {
    bad("snn.output_decay must be in [0, 1]");
  }
  if (!(hidden_threshold > 0.0)) bad("snn.hidden_threshold must be > 0");
  if (!(surrogate_alpha > 0.0)) bad("snn.surrogate_alpha must be > 0");
  if (energy_batch < 1) bad("energy.batch must be >= 1");
  if (energy_window < 1) bad("energy.window must be >= 1");
  if (!(costs.mult_pj >= 0.0) || !(costs.add_pj >= 0.0)) {
    bad("energy op costs must be >= 0");
  }
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    const Field* field = nullptr;
    for (const Field& f : registry()) {
      if (f.key == key) {
        field = &f;
        break;
      }
    }
    if (!field) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    }
    if (!field->set(cfg, value)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": invalid value for '" + key + "': '" + value + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : registry()) {
    const std::size_t dot = f.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    if (sec != section) {
      out << "\n";
      section = sec;
    }
    out << f.key << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

}  // namespace spikegrasp::harness

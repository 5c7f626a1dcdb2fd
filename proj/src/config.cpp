#include "mosbench/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "mosbench/csv.hpp"
#include "mosbench/error.hpp"

namespace mosbench {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  const auto s = trim(text);
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError(key, "config key '" + key + "': expected an integer, got '" + text + "'");
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError(key, "config key '" + key + "': expected a number, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(key, "config key '" + key + "': expected true or false, got '" + text + "'");
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>)
      out += values[i];
    else
      out += std::to_string(values[i]);
  }
  return out;
}

template <typename T>
std::vector<T> parse_integers(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_integer<T>(key, item));
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field int_field(std::string key, T RunConfig::*section, int T::*member) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = parse_integer<int>(k, v);
          },
          [=](const RunConfig& c) { return std::to_string((c.*section).*member); }};
}

template <typename T, typename M>
Field u64_field(std::string key, T RunConfig::*section, M T::*member) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = M(parse_integer<std::uint64_t>(k, v));
          },
          [=](const RunConfig& c) { return std::to_string((c.*section).*member); }};
}

template <typename T>
Field real_field(std::string key, T RunConfig::*section, double T::*member) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = parse_real(k, v);
          },
          [=](const RunConfig& c) { return format_real((c.*section).*member); }};
}

template <typename T>
Field bool_field(std::string key, T RunConfig::*section, bool T::*member) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = parse_bool(k, v);
          },
          [=](const RunConfig& c) { return std::string((c.*section).*member ? "true" : "false"); }};
}

template <typename T>
Field text_field(std::string key, T RunConfig::*section, std::string T::*member) {
  return {key,
          [=](RunConfig& c, const std::string&, const std::string& v) {
            (c.*section).*member = trim(v);
          },
          [=](const RunConfig& c) { return (c.*section).*member; }};
}

// Accessors into nested train sections.
Field train_int(std::string key, int TrainConfig::*m) { return int_field(key, &RunConfig::train, m); }

Field arch_int(std::string key, int ArchConfig::*m) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.arch.*m = parse_integer<int>(k, v);
          },
          [=](const RunConfig& c) { return std::to_string(c.train.arch.*m); }};
}

Field arch_real(std::string key, double ArchConfig::*m) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.arch.*m = parse_real(k, v);
          },
          [=](const RunConfig& c) { return format_real(c.train.arch.*m); }};
}

Field arch_list(std::string key, std::vector<int> ArchConfig::*m) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.arch.*m = parse_integers<int>(k, v);
          },
          [=](const RunConfig& c) { return join(c.train.arch.*m); }};
}

Field loss_real(std::string key, double LossConfig::*m) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.loss.*m = parse_real(k, v);
          },
          [=](const RunConfig& c) { return format_real(c.train.loss.*m); }};
}

Field ablation(std::string key, bool AblationFlags::*m) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.ablation.*m = parse_bool(k, v);
          },
          [=](const RunConfig& c) { return std::string(c.train.ablation.*m ? "true" : "false"); }};
}

Field split_size(std::string key, std::size_t SplitSizes::*m) {
  return {key,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.data.split.*m = std::size_t(parse_integer<std::uint64_t>(k, v));
          },
          [=](const RunConfig& c) { return std::to_string(c.data.split.*m); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(int_field("stft.sample_rate", &RunConfig::stft, &StftConfig::sample_rate));
    f.push_back(int_field("stft.fft_size", &RunConfig::stft, &StftConfig::fft_size));
    f.push_back(int_field("stft.window_length", &RunConfig::stft, &StftConfig::window_length));
    f.push_back(int_field("stft.hop_length", &RunConfig::stft, &StftConfig::hop_length));

    f.push_back(arch_list("arch.mean_channels", &ArchConfig::mean_channels));
    f.push_back(arch_list("arch.bias_channels", &ArchConfig::bias_channels));
    f.push_back(arch_int("arch.convs_per_mean_block", &ArchConfig::convs_per_mean_block));
    f.push_back(arch_int("arch.convs_per_bias_block", &ArchConfig::convs_per_bias_block));
    f.push_back(arch_int("arch.recurrent_hidden", &ArchConfig::recurrent_hidden));
    f.push_back(arch_int("arch.dense_hidden", &ArchConfig::dense_hidden));
    f.push_back(arch_real("arch.dropout_rate", &ArchConfig::dropout_rate));
    f.push_back(arch_int("arch.judge_embedding_dim", &ArchConfig::judge_embedding_dim));
    f.push_back(arch_int("arch.num_judges", &ArchConfig::num_judges));
    f.push_back(arch_real("arch.norm_momentum", &ArchConfig::norm_momentum));

    f.push_back(loss_real("loss.tau", &LossConfig::tau));
    f.push_back(loss_real("loss.lambda_bias", &LossConfig::lambda_bias));
    f.push_back(loss_real("loss.frame_weight", &LossConfig::frame_weight));
    f.push_back({"loss.clipping_enabled",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.train.loss.clipping_enabled = parse_bool(k, v);
                 },
                 [](const RunConfig& c) {
                   return std::string(c.train.loss.clipping_enabled ? "true" : "false");
                 }});

    f.push_back(train_int("train.batch_size", &TrainConfig::batch_size));
    f.push_back(real_field("train.learning_rate", &RunConfig::train, &TrainConfig::learning_rate));
    f.push_back(train_int("train.epochs", &TrainConfig::epochs));
    f.push_back(u64_field("train.seed", &RunConfig::train, &TrainConfig::seed));

    f.push_back(ablation("ablation.disable_biasnet", &AblationFlags::disable_biasnet));
    f.push_back(ablation("ablation.disable_meannet", &AblationFlags::disable_meannet));
    f.push_back(ablation("ablation.disable_clipping", &AblationFlags::disable_clipping));
    f.push_back(ablation("ablation.zero_padding", &AblationFlags::zero_padding));

    f.push_back(int_field("synth.num_systems", &RunConfig::synth, &SynthSpec::num_systems));
    f.push_back(int_field("synth.utterances_per_system", &RunConfig::synth,
                          &SynthSpec::utterances_per_system));
    f.push_back(int_field("synth.total_judges", &RunConfig::synth, &SynthSpec::total_judges));
    f.push_back(int_field("synth.judges_per_utterance", &RunConfig::synth,
                          &SynthSpec::judges_per_utterance));
    f.push_back(real_field("synth.judge_bias_std", &RunConfig::synth, &SynthSpec::judge_bias_std));
    f.push_back(real_field("synth.utterance_noise_std", &RunConfig::synth,
                           &SynthSpec::utterance_noise_std));
    f.push_back(real_field("synth.rating_noise_std", &RunConfig::synth,
                           &SynthSpec::rating_noise_std));
    f.push_back(int_field("synth.min_frames", &RunConfig::synth, &SynthSpec::min_frames));
    f.push_back(int_field("synth.max_frames", &RunConfig::synth, &SynthSpec::max_frames));
    f.push_back(u64_field("synth.seed", &RunConfig::synth, &SynthSpec::seed));

    f.push_back(text_field("data.source", &RunConfig::data, &DataConfig::source));
    f.push_back(text_field("data.manifest", &RunConfig::data, &DataConfig::manifest));
    f.push_back(text_field("data.audio_root", &RunConfig::data, &DataConfig::audio_root));
    f.push_back(text_field("data.cache", &RunConfig::data, &DataConfig::cache));
    f.push_back(split_size("data.split_train", &SplitSizes::train));
    f.push_back(split_size("data.split_validation", &SplitSizes::validation));
    f.push_back(split_size("data.split_test", &SplitSizes::test));
    f.push_back(u64_field("data.split_seed", &RunConfig::data, &DataConfig::split_seed));

    f.push_back({"eval.modes",
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.eval.modes = split_list(v);
                 },
                 [](const RunConfig& c) { return join(c.eval.modes); }});
    f.push_back(u64_field("eval.random_seed", &RunConfig::eval, &EvalConfig::random_seed));
    f.push_back(text_field("eval.checkpoint", &RunConfig::eval, &EvalConfig::checkpoint));
    f.push_back(text_field("eval.split", &RunConfig::eval, &EvalConfig::split));
    f.push_back(text_field("eval.predict_mode", &RunConfig::eval, &EvalConfig::predict_mode));

    f.push_back({"run.seeds",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.seeds = parse_integers<std::uint64_t>(k, v);
                 },
                 [](const RunConfig& c) { return join(c.seeds); }});
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (stft.sample_rate < 1 || stft.fft_size < 1 || stft.window_length < 1 ||
      stft.hop_length < 1)
    throw ValidationError("stft settings must be positive");
  if (stft.window_length > stft.fft_size)
    throw ValidationError("stft.window_length exceeds stft.fft_size");
  ArchConfig arch = train.arch;
  if (arch.num_judges == 0) arch.num_judges = 1;  // filled from the roster later
  arch.validate();
  train.validate();
  synth.validate();
  if (data.source != "synth" && data.source != "manifest")
    throw ValidationError("data.source must be synth or manifest, got '" + data.source + "'");
  if (data.source == "manifest" && data.manifest.empty())
    throw ValidationError("data.source = manifest needs data.manifest");
  if (eval.split != "train" && eval.split != "validation" && eval.split != "test" &&
      eval.split != "all")
    throw ValidationError("eval.split must be train, validation, test or all");
  eval_modes(*this);
  InferenceMode::parse(eval.predict_mode, eval.random_seed);
  if (seeds.empty()) throw ValidationError("run.seeds must list at least one seed");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (f.key == key) {
      f.set(config, key, value);
      return;
    }
  throw ConfigError(key, "unknown config key '" + key + "'");
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError(trim(assignment), "override '" + assignment + "' is not key=value");
  apply_setting(config, trim(std::string_view(assignment).substr(0, eq)),
                std::string(assignment.substr(eq + 1)));
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string content = trim(std::string_view(line).substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos)
      throw ConfigError(content, where + "expected key = value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError(key, where + "repeated key '" + key + "'");
    try {
      apply_setting(config, key, content.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(e.key(), where + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<InferenceMode> eval_modes(const RunConfig& config) {
  std::vector<InferenceMode> modes;
  for (const auto& name : config.eval.modes)
    modes.push_back(InferenceMode::parse(name, config.eval.random_seed));
  if (modes.empty()) throw ValidationError("eval.modes must list at least one mode");
  return modes;
}

}  // namespace mosbench

#include "mlstm/run/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mlstm/common/error.hpp"

namespace mlstm::run {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_float(float v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MLSTM_NUMBER_FIELD(name, member, type)                                          \
  Field {                                                                               \
    name, [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); }, \
        [](const RunConfig& c) { return fmt_value(c.member); }                          \
  }

std::string fmt_value(double v) { return format_double(v); }
std::string fmt_value(float v) { return format_float(v); }
template <typename T>
std::string fmt_value(T v) {
  return std::to_string(v);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      MLSTM_NUMBER_FIELD("hidden_dim", model.hidden_dim, std::size_t),
      MLSTM_NUMBER_FIELD("embed_dim", model.embed_dim, std::size_t),
      MLSTM_NUMBER_FIELD("seq_len", model.seq_len, std::size_t),
      Field{"precision",
            [](RunConfig& c, const std::string& v) { c.precision = model::parse_precision(v); },
            [](const RunConfig& c) { return std::string(model::to_string(c.precision)); }},
      MLSTM_NUMBER_FIELD("batch_size", batch_size, std::size_t),
      MLSTM_NUMBER_FIELD("n_workers", n_workers, std::size_t),
      MLSTM_NUMBER_FIELD("base_lr", base_lr, double),
      Field{"lr_rule",
            [](RunConfig& c, const std::string& v) { c.lr_rule = optim::parse_scaling_rule(v); },
            [](const RunConfig& c) { return std::string(optim::to_string(c.lr_rule)); }},
      MLSTM_NUMBER_FIELD("decay_iters", decay_iters, std::uint64_t),
      MLSTM_NUMBER_FIELD("max_epochs", max_epochs, std::uint32_t),
      MLSTM_NUMBER_FIELD("max_iters", max_iters, std::uint64_t),
      Field{"schedule_clock",
            [](RunConfig& c, const std::string& v) {
              if (v == "all") {
                c.schedule_clock = ScheduleClock::kAllBatches;
              } else if (v == "applied") {
                c.schedule_clock = ScheduleClock::kAppliedUpdates;
              } else {
                throw ConfigError("schedule_clock must be 'all' or 'applied'");
              }
            },
            [](const RunConfig& c) { return to_string(c.schedule_clock); }},
      MLSTM_NUMBER_FIELD("loss_scale", loss_scale, float),
      MLSTM_NUMBER_FIELD("scale_growth_interval", scale_growth_interval, std::uint32_t),
      MLSTM_NUMBER_FIELD("loss_scale_min", loss_scale_min, float),
      MLSTM_NUMBER_FIELD("loss_scale_max", loss_scale_max, float),
      MLSTM_NUMBER_FIELD("divergence_window", divergence_window, std::uint32_t),
      MLSTM_NUMBER_FIELD("divergence_loss_nats", divergence_loss_nats, double),
      MLSTM_NUMBER_FIELD("seed", seed, std::uint64_t),
      MLSTM_NUMBER_FIELD("data_seed", data_seed, std::uint64_t),
      Field{"corpus", [](RunConfig& c, const std::string& v) { c.corpus = v; },
            [](const RunConfig& c) { return c.corpus.string(); }},
      Field{"corpus_format",
            [](RunConfig& c, const std::string& v) {
              c.corpus_format = data::parse_corpus_format(v);
            },
            [](const RunConfig& c) {
              return std::string(c.corpus_format == data::CorpusFormat::kLines ? "lines" : "dir");
            }},
      MLSTM_NUMBER_FIELD("eval_batch_size", eval_batch_size, std::size_t),
      MLSTM_NUMBER_FIELD("checkpoint_every", checkpoint_every, std::uint64_t),
  };
  return table;
}

#undef MLSTM_NUMBER_FIELD

}  // namespace

std::string to_string(ScheduleClock clock) {
  return clock == ScheduleClock::kAllBatches ? "all" : "applied";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) {
      k.push_back(f.key);
    }
    k.emplace_back("out_dir");
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "out_dir") {
    config.out_dir = value;
    return;
  }
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key + "=" + f.get(*this) + "\n";
  }
  return out;
}

optim::LrPolicy RunConfig::lr_policy() const {
  optim::LrPolicy p;
  p.base_lr = base_lr;
  p.rule = lr_rule;
  p.batch_size = batch_size;
  p.decay_iters = decay_iters;
  p.max_epochs = max_epochs;
  return p;
}

scaler::LossScaleState RunConfig::scaler_state() const {
  scaler::LossScaleState s;
  if (precision == model::Precision::kFp32) {
    // Binary32 gradients do not need shifting; keep alpha pinned at 1.
    s.alpha = 1.0F;
    s.alpha_min = 1.0F;
    s.alpha_max = 1.0F;
  } else {
    s.alpha = loss_scale;
    s.alpha_min = loss_scale_min;
    s.alpha_max = loss_scale_max;
  }
  s.growth_interval = scale_growth_interval;
  return s;
}

void RunConfig::validate() const {
  model.validate();
  if (batch_size == 0) {
    throw ConfigError("batch_size must be positive");
  }
  if (n_workers == 0 || batch_size % n_workers != 0) {
    throw ConfigError("batch_size must be divisible by n_workers");
  }
  lr_policy().validate();
  scaler_state().validate();
  if (divergence_window == 0) {
    throw ConfigError("divergence_window must be positive");
  }
  if (!(divergence_loss_nats > 0.0)) {
    throw ConfigError("divergence_loss_nats must be positive");
  }
  if (eval_batch_size == 0) {
    throw ConfigError("eval_batch_size must be positive");
  }
}

}  // namespace mlstm::run

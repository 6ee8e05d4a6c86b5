#include "mlstm/run/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "mlstm/common/error.hpp"
#include "mlstm/common/hash.hpp"

namespace mlstm::run {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'L', 'M', 'F'};
constexpr std::uint8_t kDtypeF16 = 0;
constexpr std::uint8_t kDtypeF32 = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
    return value;
  }

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw CheckpointError("checkpoint is truncated");
    }
    const std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string fmt(float v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) {
      out.push_back(',');
    }
    out += std::to_string(values[i]);
  }
  return out;
}

template <typename T>
T parse(const std::string& key, std::string_view text) {
  T out{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw CheckpointError("checkpoint field '" + key + "' is malformed");
  }
  return out;
}

template <typename T>
std::vector<T> split_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  if (text.empty()) {
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse<T>(key, std::string_view(text).substr(start, end - start)));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

void put_tensor(std::string& out, const std::string& name, const numerics::TensorF32& t) {
  put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out += name;
  put<std::uint8_t>(out, kDtypeF32);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.dims()) {
    put<std::uint64_t>(out, d);
  }
  const auto bytes = std::as_bytes(t.data());
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

struct RawTensor {
  std::uint8_t dtype = 0;
  std::vector<std::size_t> dims;
  std::string_view payload;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  const TrainingState& s = ck.state;
  std::string header = ck.config.serialize();
  auto line = [&header](const std::string& k, const std::string& v) {
    header += k + "=" + v + "\n";
  };
  line("state.iteration", std::to_string(s.iteration));
  line("state.epoch", std::to_string(s.epoch));
  line("state.applied", std::to_string(s.applied));
  line("state.skipped", std::to_string(s.skipped));
  line("state.divergence_streak", std::to_string(s.divergence_streak));
  line("scaler.alpha", fmt(s.scaler.alpha));
  line("scaler.growth_interval", std::to_string(s.scaler.growth_interval));
  line("scaler.clean_steps", std::to_string(s.scaler.clean_steps));
  line("scaler.backoff_factor", fmt(s.scaler.backoff_factor));
  line("scaler.growth_factor", fmt(s.scaler.growth_factor));
  line("scaler.alpha_min", fmt(s.scaler.alpha_min));
  line("scaler.alpha_max", fmt(s.scaler.alpha_max));
  line("adam.beta1", fmt(s.adam.beta1));
  line("adam.beta2", fmt(s.adam.beta2));
  line("adam.eps", fmt(s.adam.eps));
  line("adam.t", std::to_string(s.adam.t));
  line("cursor.row_shard", join(s.cursor.row_shard));
  line("cursor.row_offset", join(s.cursor.row_offset));
  line("cursor.row_fresh", join(s.cursor.row_fresh));
  line("cursor.next_shard", std::to_string(s.cursor.next_shard));
  line("cursor.epoch", std::to_string(s.cursor.epoch));

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header.size());
  out += header;
  for (std::size_t i = 0; i < model::kParamCount; ++i) {
    put_tensor(out, "param." + std::string(model::param_name(i)), s.masters[i]);
  }
  for (std::size_t i = 0; i < model::kParamCount; ++i) {
    put_tensor(out, "adam.m." + std::string(model::param_name(i)), s.adam.m[i]);
  }
  for (std::size_t i = 0; i < model::kParamCount; ++i) {
    put_tensor(out, "adam.v." + std::string(model::param_name(i)), s.adam.v[i]);
  }
  put_tensor(out, "hidden.h", s.hidden.h);
  put_tensor(out, "hidden.c", s.hidden.c);
  put<std::uint64_t>(out, fnv1a64(std::as_bytes(std::span(out.data(), out.size()))));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 8 + 8) {
    throw CheckpointError("checkpoint is truncated");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.take(sizeof kMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, 8);
  if (stored != fnv1a64(std::as_bytes(std::span(bytes.data(), body)))) {
    throw CheckpointError("checkpoint checksum mismatch");
  }
  Reader rb(std::string_view(bytes).substr(0, body));
  rb.take(sizeof kMagic + 4);
  const auto header_len = rb.get<std::uint64_t>();
  const std::string header(rb.take(header_len));

  std::map<std::string, std::string> kv;
  std::string config_text;
  {
    std::istringstream in(header);
    std::string ln;
    while (std::getline(in, ln)) {
      const auto eq = ln.find('=');
      if (eq == std::string::npos) {
        throw CheckpointError("checkpoint header line without '='");
      }
      const std::string key = ln.substr(0, eq);
      if (key.find('.') == std::string::npos) {
        config_text += ln + "\n";
      } else {
        kv[key] = ln.substr(eq + 1);
      }
    }
  }
  auto field = [&kv](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw CheckpointError("checkpoint header is missing '" + key + "'");
    }
    return it->second;
  };

  Checkpoint ck;
  try {
    ck.config = parse_config(config_text);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  TrainingState& s = ck.state;
  s.iteration = parse<std::uint64_t>("state.iteration", field("state.iteration"));
  s.epoch = parse<std::uint64_t>("state.epoch", field("state.epoch"));
  s.applied = parse<std::uint64_t>("state.applied", field("state.applied"));
  s.skipped = parse<std::uint64_t>("state.skipped", field("state.skipped"));
  s.divergence_streak =
      parse<std::uint64_t>("state.divergence_streak", field("state.divergence_streak"));
  s.scaler.alpha = parse<float>("scaler.alpha", field("scaler.alpha"));
  s.scaler.growth_interval =
      parse<std::uint32_t>("scaler.growth_interval", field("scaler.growth_interval"));
  s.scaler.clean_steps = parse<std::uint32_t>("scaler.clean_steps", field("scaler.clean_steps"));
  s.scaler.backoff_factor = parse<float>("scaler.backoff_factor", field("scaler.backoff_factor"));
  s.scaler.growth_factor = parse<float>("scaler.growth_factor", field("scaler.growth_factor"));
  s.scaler.alpha_min = parse<float>("scaler.alpha_min", field("scaler.alpha_min"));
  s.scaler.alpha_max = parse<float>("scaler.alpha_max", field("scaler.alpha_max"));
  s.adam.beta1 = parse<float>("adam.beta1", field("adam.beta1"));
  s.adam.beta2 = parse<float>("adam.beta2", field("adam.beta2"));
  s.adam.eps = parse<float>("adam.eps", field("adam.eps"));
  s.adam.t = parse<std::uint64_t>("adam.t", field("adam.t"));
  s.cursor.row_shard = split_list<std::int64_t>("cursor.row_shard", field("cursor.row_shard"));
  s.cursor.row_offset = split_list<std::uint64_t>("cursor.row_offset", field("cursor.row_offset"));
  s.cursor.row_fresh = split_list<std::uint8_t>("cursor.row_fresh", field("cursor.row_fresh"));
  s.cursor.next_shard = parse<std::uint64_t>("cursor.next_shard", field("cursor.next_shard"));
  s.cursor.epoch = parse<std::uint64_t>("cursor.epoch", field("cursor.epoch"));

  std::map<std::string, RawTensor> tensors;
  while (!rb.done()) {
    const auto name_len = rb.get<std::uint16_t>();
    std::string name(rb.take(name_len));
    RawTensor t;
    t.dtype = rb.get<std::uint8_t>();
    const auto rank = rb.get<std::uint8_t>();
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      t.dims.push_back(static_cast<std::size_t>(rb.get<std::uint64_t>()));
      count *= t.dims.back();
    }
    if (t.dtype != kDtypeF16 && t.dtype != kDtypeF32) {
      throw CheckpointError("tensor '" + name + "' has unknown dtype tag");
    }
    t.payload = rb.take(count * (t.dtype == kDtypeF32 ? 4 : 2));
    tensors[name] = t;
  }

  auto load = [&tensors](const std::string& name, const std::vector<std::size_t>& dims) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw CheckpointError("checkpoint is missing tensor '" + name + "'");
    }
    if (it->second.dims != dims || it->second.dtype != kDtypeF32) {
      throw CheckpointError("tensor '" + name + "' has unexpected shape or dtype");
    }
    numerics::TensorF32 t(dims);
    std::memcpy(t.data().data(), it->second.payload.data(), it->second.payload.size());
    return t;
  };
  const model::MlstmConfig& mc = ck.config.model;
  s.masters = model::ParamTensors::zeros(mc);
  s.adam.m = model::ParamTensors::zeros(mc);
  s.adam.v = model::ParamTensors::zeros(mc);
  for (std::size_t i = 0; i < model::kParamCount; ++i) {
    const std::string pname(model::param_name(i));
    const auto dims = s.masters[i].dims();
    const std::vector<std::size_t> d(dims.begin(), dims.end());
    s.masters[i] = load("param." + pname, d);
    s.adam.m[i] = load("adam.m." + pname, d);
    s.adam.v[i] = load("adam.v." + pname, d);
  }
  const std::vector<std::size_t> hd = {ck.config.batch_size, mc.hidden_dim};
  s.hidden.h = load("hidden.h", hd);
  s.hidden.c = load("hidden.c", hd);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw CheckpointError("cannot write " + tmp.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw CheckpointError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError("cannot open checkpoint " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace mlstm::run

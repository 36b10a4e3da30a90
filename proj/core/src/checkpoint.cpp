#include "sigforecast/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "sigforecast/errors.hpp"

namespace sigforecast {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'I', 'G', 'F', 'C', 'K', 'P', 'T'};
enum class Kind : std::uint8_t { Reals = 1, Integers = 2, Text = 3 };

template <class U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <class U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw FormatError("checkpoint is truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

std::string get_bytes(std::istream& in, std::uint64_t n) {
  if (n > (1ull << 40)) throw FormatError("checkpoint entry size is implausible");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("checkpoint is truncated");
  return s;
}

template <class T>
const T& typed(const std::map<std::string, Checkpoint::Entry>& entries, const std::string& name) {
  const auto it = entries.find(name);
  if (it == entries.end()) throw FormatError("checkpoint has no entry '" + name + "'");
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw FormatError("checkpoint entry '" + name + "' has the wrong type");
  return *v;
}

std::vector<std::int64_t> ints(std::initializer_list<std::int64_t> v) { return v; }

}  // namespace

const std::vector<double>& Checkpoint::reals(const std::string& name) const {
  return typed<std::vector<double>>(entries_, name);
}
const std::vector<std::int64_t>& Checkpoint::integers(const std::string& name) const {
  return typed<std::vector<std::int64_t>>(entries_, name);
}
const std::string& Checkpoint::text(const std::string& name) const { return typed<std::string>(entries_, name); }

void Checkpoint::write(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, entry] : entries_) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          Kind kind = Kind::Text;
          if constexpr (std::is_same_v<T, std::vector<double>>) kind = Kind::Reals;
          if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) kind = Kind::Integers;
          put_le<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
          put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
          out.write(name.data(), static_cast<std::streamsize>(name.size()));
          put_le<std::uint64_t>(out, v.size());
          if constexpr (std::is_same_v<T, std::string>) {
            out.write(v.data(), static_cast<std::streamsize>(v.size()));
          } else {
            for (const auto x : v) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
          }
        },
        entry);
  }
  if (!out) throw FormatError("failed writing checkpoint");
}

Checkpoint Checkpoint::read(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("not a checkpoint file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw FormatError("incompatible checkpoint version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(kVersion) + ")");
  }
  const auto count = get_le<std::uint32_t>(in);
  Checkpoint ck;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto kind = static_cast<Kind>(get_le<std::uint8_t>(in));
    const std::string name = get_bytes(in, get_le<std::uint32_t>(in));
    const auto n = get_le<std::uint64_t>(in);
    switch (kind) {
      case Kind::Reals: {
        if (n > (1ull << 37)) throw FormatError("checkpoint entry size is implausible");
        std::vector<double> v(n);
        for (auto& x : v) x = std::bit_cast<double>(get_le<std::uint64_t>(in));
        ck.put(name, std::move(v));
        break;
      }
      case Kind::Integers: {
        if (n > (1ull << 37)) throw FormatError("checkpoint entry size is implausible");
        std::vector<std::int64_t> v(n);
        for (auto& x : v) x = std::bit_cast<std::int64_t>(get_le<std::uint64_t>(in));
        ck.put(name, std::move(v));
        break;
      }
      case Kind::Text:
        ck.put(name, get_bytes(in, n));
        break;
      default:
        throw FormatError("checkpoint entry '" + name + "' has an unknown kind");
    }
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write(out);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read(in);
}

Checkpoint to_checkpoint(const ModelBundle& bundle) {
  const Model& m = bundle.model;
  const ModelConfig& c = m.config();
  Checkpoint ck;
  ck.put("dims", ints({c.levels, c.features, c.input_dim(), c.horizon, c.window, c.lags}));
  ck.put("flags", ints({c.variational ? 1 : 0, c.shared_covariance ? 1 : 0}));
  ck.put("mode", std::string(to_string(c.mode)));
  ck.put("penalty_weight", std::vector<double>{c.penalty_weight});
  ck.put("seed", ints({static_cast<std::int64_t>(c.seed)}));

  const RandomBasis& b = m.basis();
  ck.put("basis/normals", b.normals);
  ck.put("basis/phase_uniforms", b.phase_uniforms);
  ck.put("basis/gamma_normals", b.gamma_normals);
  ck.put("basis/gamma_uniforms", b.gamma_uniforms);
  for (const ParameterBlock& p : m.params().blocks) ck.put("param/" + p.name, p.values);

  std::vector<double> means, scales;
  for (const Standardizer& s : bundle.scalers) {
    means.push_back(s.mean);
    scales.push_back(s.scale);
  }
  ck.put("scaler/mean", std::move(means));
  ck.put("scaler/scale", std::move(scales));
  ck.put("betas", bundle.betas);
  return ck;
}

ModelBundle from_checkpoint(const Checkpoint& ck) {
  const auto& dims = ck.integers("dims");
  const auto& flags = ck.integers("flags");
  if (dims.size() != 6 || flags.size() != 2) throw FormatError("checkpoint dims are malformed");
  ModelConfig c;
  c.levels = static_cast<int>(dims[0]);
  c.features = static_cast<int>(dims[1]);
  c.horizon = static_cast<int>(dims[3]);
  c.window = static_cast<int>(dims[4]);
  c.lags = static_cast<int>(dims[5]);
  if (dims[2] != c.input_dim()) throw FormatError("checkpoint input dimension disagrees with its lag count");
  c.variational = flags[0] != 0;
  c.shared_covariance = flags[1] != 0;
  c.mode = parse_objective_mode(ck.text("mode"));
  c.penalty_weight = ck.reals("penalty_weight").at(0);
  c.seed = static_cast<std::uint64_t>(ck.integers("seed").at(0));

  RandomBasis b;
  b.levels = c.levels;
  b.input_dim = c.input_dim();
  b.features = c.features;
  b.seed = c.seed;
  b.normals = ck.reals("basis/normals");
  b.phase_uniforms = ck.reals("basis/phase_uniforms");
  b.gamma_normals = ck.reals("basis/gamma_normals");
  b.gamma_uniforms = ck.reals("basis/gamma_uniforms");
  const std::size_t md = static_cast<std::size_t>(c.levels) * c.features;
  if (b.normals.size() != md * b.input_dim || b.phase_uniforms.size() != md || b.gamma_normals.size() != 2 * md ||
      b.gamma_uniforms.size() != 2 * md * kShapeAugmentation) {
    throw FormatError("checkpoint random basis has the wrong size");
  }

  ParameterSet params;
  for (const char* name : {"weight_mean", "weight_chol", "log_noise_var", "log_lengthscale", "freq_mean",
                           "log_freq_std", "log_shape_a", "log_shape_b", "decay_logit", "order_logit"}) {
    params.blocks.push_back({name, ck.reals(std::string("param/") + name)});
  }
  ModelBundle bundle{Model(c, std::move(b), std::move(params)), {}, ck.reals("betas")};
  const auto& means = ck.reals("scaler/mean");
  const auto& scales = ck.reals("scaler/scale");
  if (means.size() != scales.size()) throw FormatError("checkpoint scaler arrays differ in length");
  for (std::size_t i = 0; i < means.size(); ++i) bundle.scalers.push_back({means[i], scales[i]});
  return bundle;
}

}  // namespace sigforecast

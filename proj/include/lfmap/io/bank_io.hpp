#pragma once

// Bank storage: a directory holding manifest.json plus binary shard files.
//
// Shard layout (little-endian):
//   "LFBANK01"                     8 bytes
//   first simulation index         u64
//   simulation count n             u64
//   scenario count s               u32
//   points per trajectory t        u32
//   population, V/H, k, importation, proposal pmf, equilibrium
//                                  6 columns of n f64 each
//   trajectories                   s * n * t f64, [scenario][simulation][year]
//   crc32 of everything above      u32

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <zlib.h>

#include "json.hpp"
#include "lfmap/bank.hpp"
#include "lfmap/error.hpp"
#include "lfmap/io/csv.hpp"

namespace lfmap::io {

inline constexpr std::array<char, 8> kShardMagic{'L', 'F', 'B', 'A', 'N', 'K', '0', '1'};
inline constexpr int kManifestVersion = 1;

namespace detail {

template <class T>
void put(std::vector<unsigned char>& buf, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

template <class T>
T get(const std::vector<unsigned char>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw FormatError("shard is truncated");
  std::array<unsigned char, sizeof(T)> bytes;
  std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(pos), sizeof(T), bytes.begin());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  pos += sizeof(T);
  return value;
}

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (size > 0) {
    const auto piece = static_cast<uInt>(std::min<std::size_t>(size, 1U << 30));
    crc = ::crc32(crc, data, piece);
    data += piece;
    size -= piece;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  // Write to a temporary name first so an interrupted run never leaves a
  // half-written file under the final name.
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline std::uint32_t file_crc32(const std::string& path) {
  const auto bytes = detail::read_bytes(path);
  return detail::crc32_of(bytes.data(), bytes.size());
}

/// Encodes a bank fragment whose first simulation has global index `first`.
inline std::vector<unsigned char> encode_shard(const SimulationBank& part, std::uint64_t first) {
  std::vector<unsigned char> buf(kShardMagic.begin(), kShardMagic.end());
  const std::size_t n = part.size();
  detail::put<std::uint64_t>(buf, first);
  detail::put<std::uint64_t>(buf, n);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(part.scenarios().size()));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(part.points()));
  for (std::size_t j = 0; j < n; ++j) detail::put<double>(buf, part.parameters(j).population);
  for (std::size_t j = 0; j < n; ++j) detail::put<double>(buf, part.parameters(j).vector_host_ratio);
  for (std::size_t j = 0; j < n; ++j) detail::put<double>(buf, part.parameters(j).aggregation_k);
  for (std::size_t j = 0; j < n; ++j) detail::put<double>(buf, part.parameters(j).importation_rate);
  for (std::size_t j = 0; j < n; ++j) detail::put<double>(buf, part.proposal_pmf(j));
  for (std::size_t j = 0; j < n; ++j) detail::put<double>(buf, part.equilibrium(j));
  for (double v : part.raw_trajectories()) detail::put<double>(buf, v);
  detail::put<std::uint32_t>(buf, detail::crc32_of(buf.data(), buf.size()));
  return buf;
}

struct DecodedShard {
  std::uint64_t first = 0;
  SimulationBank bank;
};

/// Decodes a shard; scenario names and horizon come from the manifest.
inline DecodedShard decode_shard(const std::vector<unsigned char>& buf, const std::vector<std::string>& scenarios,
                                 int horizon_years, const std::string& label = "shard") {
  if (buf.size() < kShardMagic.size() + 4 || !std::equal(kShardMagic.begin(), kShardMagic.end(), buf.begin())) {
    throw FormatError(label + ": not an lfmap bank shard");
  }
  std::size_t tail = buf.size() - 4;
  const auto stored = detail::get<std::uint32_t>(buf, tail);
  if (stored != detail::crc32_of(buf.data(), buf.size() - 4)) {
    throw FormatError(label + ": checksum mismatch (file is corrupt)");
  }
  std::size_t pos = kShardMagic.size();
  DecodedShard out;
  out.first = detail::get<std::uint64_t>(buf, pos);
  const auto n = detail::get<std::uint64_t>(buf, pos);
  const auto s = detail::get<std::uint32_t>(buf, pos);
  const auto t = detail::get<std::uint32_t>(buf, pos);
  if (s != scenarios.size() || t != static_cast<std::uint32_t>(horizon_years) + 1) {
    throw FormatError(label + ": shape does not match the manifest");
  }
  if (buf.size() != pos + (6 * n + std::uint64_t{s} * n * t) * 8 + 4) {
    throw FormatError(label + ": size does not match its header");
  }
  out.bank = SimulationBank(scenarios, horizon_years);
  out.bank.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double pop = detail::get<double>(buf, pos);
    out.bank.parameters(j).population = static_cast<int>(pop);
  }
  for (std::size_t j = 0; j < n; ++j) out.bank.parameters(j).vector_host_ratio = detail::get<double>(buf, pos);
  for (std::size_t j = 0; j < n; ++j) out.bank.parameters(j).aggregation_k = detail::get<double>(buf, pos);
  for (std::size_t j = 0; j < n; ++j) out.bank.parameters(j).importation_rate = detail::get<double>(buf, pos);
  for (std::size_t j = 0; j < n; ++j) out.bank.proposal_pmf(j) = detail::get<double>(buf, pos);
  for (std::size_t j = 0; j < n; ++j) out.bank.equilibrium(j) = detail::get<double>(buf, pos);
  for (double& v : out.bank.raw_trajectories()) v = detail::get<double>(buf, pos);
  return out;
}

/// Writes a shard file and returns the crc32 of the whole file.
inline std::uint32_t write_shard(const std::string& path, const SimulationBank& part, std::uint64_t first) {
  const auto bytes = encode_shard(part, first);
  detail::write_bytes(path, bytes);
  return detail::crc32_of(bytes.data(), bytes.size());
}

struct ShardEntry {
  std::string file;
  std::uint64_t first = 0;
  std::uint64_t count = 0;
  std::uint32_t crc32 = 0;
};

/// Everything needed to reproduce a bank and locate its shards.
struct BankManifest {
  std::uint64_t seed = 0;
  std::uint64_t simulations = 0;
  std::uint64_t shard_size = 0;
  std::vector<std::string> scenarios;
  int horizon_years = 0;
  /// The run configuration the bank was generated from.
  nlohmann::json config;
  /// Yearly importation multipliers per scenario from the pilot stage.
  nlohmann::json importation;
  std::vector<ShardEntry> shards;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "lfmap-bank";
    j["version"] = kManifestVersion;
    j["seed"] = seed;
    j["simulations"] = simulations;
    j["shard_size"] = shard_size;
    j["scenarios"] = scenarios;
    j["horizon_years"] = horizon_years;
    j["config"] = config;
    j["importation"] = importation;
    j["shards"] = nlohmann::json::array();
    for (const auto& s : shards) {
      j["shards"].push_back({{"file", s.file}, {"first", s.first}, {"count", s.count}, {"crc32", s.crc32}});
    }
    return j;
  }

  static BankManifest from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "lfmap-bank") throw FormatError("not an lfmap bank manifest");
    if (j.value("version", 0) != kManifestVersion) throw FormatError("unsupported bank manifest version");
    BankManifest m;
    try {
      m.seed = j.at("seed").get<std::uint64_t>();
      m.simulations = j.at("simulations").get<std::uint64_t>();
      m.shard_size = j.at("shard_size").get<std::uint64_t>();
      m.scenarios = j.at("scenarios").get<std::vector<std::string>>();
      m.horizon_years = j.at("horizon_years").get<int>();
      m.config = j.value("config", nlohmann::json::object());
      m.importation = j.value("importation", nlohmann::json::object());
      for (const auto& s : j.at("shards")) {
        m.shards.push_back({s.at("file").get<std::string>(), s.at("first").get<std::uint64_t>(),
                            s.at("count").get<std::uint64_t>(), s.at("crc32").get<std::uint32_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bank manifest: ") + e.what());
    }
    return m;
  }
};

inline std::string manifest_path(const std::string& dir) { return (std::filesystem::path(dir) / "manifest.json").string(); }

inline std::string shard_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%05zu.lfb", index);
  return buf;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  const std::string text = j.dump(2) + "\n";
  detail::write_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_manifest(const std::string& dir, const BankManifest& m) { write_json(manifest_path(dir), m.to_json()); }

inline BankManifest read_manifest(const std::string& dir) { return BankManifest::from_json(read_json(manifest_path(dir))); }

/// Checks that a shard file exists and matches its manifest checksum.
inline bool shard_intact(const std::string& dir, const ShardEntry& entry) {
  const auto path = std::filesystem::path(dir) / entry.file;
  if (!std::filesystem::exists(path)) return false;
  return file_crc32(path.string()) == entry.crc32;
}

/// Loads a complete bank, verifying every shard against the manifest.
inline SimulationBank read_bank(const std::string& dir) {
  const BankManifest m = read_manifest(dir);
  SimulationBank bank(m.scenarios, m.horizon_years);
  std::uint64_t expected_first = 0;
  for (const auto& entry : m.shards) {
    const auto path = (std::filesystem::path(dir) / entry.file).string();
    const auto bytes = detail::read_bytes(path);
    if (detail::crc32_of(bytes.data(), bytes.size()) != entry.crc32) {
      throw FormatError(entry.file + ": checksum does not match the manifest");
    }
    auto shard = decode_shard(bytes, m.scenarios, m.horizon_years, entry.file);
    if (shard.first != expected_first || shard.bank.size() != entry.count) {
      throw FormatError(entry.file + ": simulation range does not match the manifest");
    }
    expected_first += entry.count;
    bank.append(shard.bank);
  }
  if (expected_first != m.simulations) {
    throw FormatError(dir + ": bank is incomplete (" + std::to_string(expected_first) + " of " +
                      std::to_string(m.simulations) + " simulations)");
  }
  return bank;
}

/// Flat CSV view of a bank: one row per simulation, one column per
/// scenario-year.
inline void export_bank_csv(const SimulationBank& bank, const std::string& path) {
  std::vector<std::string> columns{"simulation", "population", "vector_host_ratio", "aggregation_k",
                                   "importation_rate", "proposal_pmf", "equilibrium"};
  for (const auto& s : bank.scenarios()) {
    for (std::size_t y = 0; y < bank.points(); ++y) columns.push_back(s + "_y" + std::to_string(y));
  }
  CsvWriter out(path, "bank", columns);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const auto& p = bank.parameters(j);
    std::vector<std::string> row{std::to_string(j), std::to_string(p.population), format_double(p.vector_host_ratio),
                                 format_double(p.aggregation_k), format_double(p.importation_rate),
                                 format_double(bank.proposal_pmf(j)), format_double(bank.equilibrium(j))};
    for (std::size_t s = 0; s < bank.scenarios().size(); ++s) {
      for (double v : bank.trajectory(s, j)) row.push_back(format_double(v));
    }
    out.row(row);
  }
  out.close();
}

}  // namespace lfmap::io

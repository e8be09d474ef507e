#include "ubsb/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "ubsb/error.hpp"

namespace ubsb {
namespace {

struct Hasher {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  Hasher() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw Error("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha256 final failed");
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }
};

nlohmann::json digests_json(const std::vector<FileDigest>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& d : v) a.push_back({{"path", d.path}, {"sha256", d.sha256}});
  return a;
}

std::vector<FileDigest> digests_from(const nlohmann::json& a) {
  std::vector<FileDigest> v;
  for (const auto& d : a) v.push_back({d.at("path").get<std::string>(), d.at("sha256").get<std::string>()});
  return v;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Hasher h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  Hasher h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void RunManifest::add_input(const std::filesystem::path& p) { inputs.push_back({p.string(), sha256_file(p)}); }
void RunManifest::add_output(const std::filesystem::path& p) { outputs.push_back({p.string(), sha256_file(p)}); }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [k, v] : seeds) s[k] = v;
  auto vers = versions;
  vers.emplace("ubsb", kVersion);
  return {{"format", "ubsb-manifest/1"},
          {"command", command},
          {"args", args},
          {"config", config},
          {"seeds", s},
          {"inputs", digests_json(inputs)},
          {"outputs", digests_json(outputs)},
          {"threads", threads},
          {"wall_clock_seconds", wall_clock_seconds},
          {"versions", vers}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ubsb-manifest/1") throw DataError("not a ubsb run manifest");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.args = j.at("args").get<std::map<std::string, std::string>>();
  m.config = j.value("config", nlohmann::json::object());
  m.seeds = j.value("seeds", std::map<std::string, std::uint64_t>{});
  m.inputs = digests_from(j.at("inputs"));
  m.outputs = digests_from(j.at("outputs"));
  m.threads = j.value("threads", 1);
  m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  m.versions = j.value("versions", std::map<std::string, std::string>{});
  return m;
}

void RunManifest::write(const std::filesystem::path& p) const {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read '" + p.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest '" + p.string() + "': " + e.what());
  }
}

std::vector<std::string> RunManifest::stale_inputs() const {
  std::vector<std::string> out;
  for (const auto& d : inputs) {
    std::error_code ec;
    if (!std::filesystem::exists(d.path, ec) || sha256_file(d.path) != d.sha256) out.push_back(d.path);
  }
  return out;
}

std::vector<std::string> compare_outputs(const RunManifest& expected, const RunManifest& actual) {
  std::map<std::string, std::string> got;
  for (const auto& d : actual.outputs) got[std::filesystem::path(d.path).filename().string()] = d.sha256;
  std::vector<std::string> diffs;
  for (const auto& d : expected.outputs) {
    const auto name = std::filesystem::path(d.path).filename().string();
    const auto it = got.find(name);
    if (it == got.end()) {
      diffs.push_back(name + ": missing");
    } else if (it->second != d.sha256) {
      diffs.push_back(name + ": digest differs");
    }
  }
  if (expected.outputs.size() != actual.outputs.size()) diffs.emplace_back("output count differs");
  return diffs;
}

}  // namespace ubsb

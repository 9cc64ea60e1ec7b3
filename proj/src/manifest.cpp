#include "eegalign/manifest.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "eegalign/error.hpp"
#include "eegalign/io.hpp"

#ifndef EEGALIGN_VERSION
#define EEGALIGN_VERSION "0.0.0"
#endif

namespace eegalign {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

RunManifest::RunManifest(std::string subcommand, std::map<std::string, std::string> config)
    : subcommand_(std::move(subcommand)), config_(std::move(config)) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs_.emplace_back(f.string(), sha256_file(f));
    return;
  }
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back(path.filename().string());
}

RunManifest::StageTimer::StageTimer(RunManifest& owner, std::string name)
    : owner_(owner), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

RunManifest::StageTimer::~StageTimer() {
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
  owner_.timings_.emplace_back(name_, dt.count());
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "eegalign";
  j["version"] = EEGALIGN_VERSION;
  j["subcommand"] = subcommand_;
  j["seed"] = config_.contains("seed") ? config_.at("seed") : std::string("0");
  j["config"] = config_;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& [path, hash] : inputs_) inputs.push_back({{"path", path}, {"sha256", hash}});
  j["inputs"] = std::move(inputs);
  j["outputs"] = outputs_;
  nlohmann::ordered_json timing = nlohmann::ordered_json::object();
  for (const auto& [name, secs] : timings_) timing[name] = secs;
  j["timing_s"] = std::move(timing);
  return j;
}

void RunManifest::write(const std::filesystem::path& dir) const {
  io::write_text(dir / "manifest.json", to_json().dump(2) + "\n");
}

}  // namespace eegalign

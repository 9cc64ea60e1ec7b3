#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace eegalign {

std::string sha256_file(const std::filesystem::path& path);

// manifest.json written once per output directory.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::map<std::string, std::string> config);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  // Times the stage between construction and destruction of the returned guard.
  class StageTimer {
   public:
    StageTimer(RunManifest& owner, std::string name);
    ~StageTimer();
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

   private:
    RunManifest& owner_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
  };
  StageTimer time_stage(std::string name) { return StageTimer(*this, std::move(name)); }

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& dir) const;

 private:
  std::string subcommand_;
  std::map<std::string, std::string> config_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace eegalign

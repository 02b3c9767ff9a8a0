#pragma once

// Stage orchestration behind the command-line tool. Every stage reads its
// inputs from the input directory or from upstream stage directories under
// the output root and writes its artifacts plus a manifest.json.

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "taskspace/common.hpp"

namespace taskspace {

/// Invalid configuration, unknown stage or unknown figure id (exit code 1).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Upstream artifacts absent (exit code 2); the message names the stages.
class MissingStageError : public Error {
  public:
    explicit MissingStageError(std::vector<std::string> stages);
    const std::vector<std::string>& stages() const { return stages_; }

  private:
    std::vector<std::string> stages_;
};

/// Key-value configuration. Unknown keys and out-of-range values are
/// rejected; `seed` has no default and must be set.
class PipelineConfig {
  public:
    PipelineConfig();

    /// `key = value` lines, '#' comments. Relative `input` paths resolve
    /// against `base_dir`.
    static PipelineConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::string& str(const std::string& key) const;
    double number(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    std::uint64_t seed() const;
    std::vector<double> numbers(const std::string& key) const;  // ';'-separated
    std::filesystem::path input() const { return input_; }
    void set_input(std::filesystem::path p) { input_ = std::move(p); }

    /// Throws ConfigError on missing seed or out-of-range values.
    void validate() const;
    /// Sorted `key=value` lines (the input path is recorded by file hashes instead).
    std::string canonical() const;
    std::string hash() const;
    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
    std::filesystem::path input_;
};

/// Stages in dependency order.
const std::vector<std::string>& stage_names();
/// Stages whose manifests must exist before `stage` runs.
const std::vector<std::string>& stage_dependencies(const std::string& stage);

/// Runs one stage; throws MissingStageError, ConfigError or Error.
void run_stage(const std::string& stage, const PipelineConfig& config, const std::filesystem::path& out,
               std::ostream& log);
/// Runs every stage in order and writes a top-level manifest.json.
void run_all(const PipelineConfig& config, const std::filesystem::path& out, std::ostream& log);

const std::vector<std::string>& figure_ids();
/// Copies (or derives) the plot-ready table for a figure into out/figures.
std::filesystem::path emit_figure(const std::string& id, const std::filesystem::path& out);

/// Writes a mini corpus with task labels consistent with the default
/// configuration and the given seed.
void write_synthetic_inputs(const std::filesystem::path& dir, std::size_t num_questions, std::uint64_t seed,
                            std::ostream& log);

}  // namespace taskspace

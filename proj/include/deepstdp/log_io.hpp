#pragma once

// JSON-lines persistence of run logs: one epoch object per line, streamed and
// flushed as the run progresses so partial logs survive aborted runs. Wall
// time is only written when timing is explicitly requested, keeping default
// logs byte-identical across repeated seeded runs.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pipeline.hpp"

namespace deepstdp {

inline std::string epoch_record_json_line(const EpochRecord& rec, bool include_timing) {
    nlohmann::ordered_json j;
    j["epoch"] = rec.epoch;
    if (rec.nmi_prev) j["nmi_prev"] = *rec.nmi_prev;
    j["fim_trace"] = rec.fim_trace;
    j["objective"] = rec.objective;
    if (rec.probe_acc) j["probe_acc"] = *rec.probe_acc;
    j["energy_mj"] = rec.energy_mj;
    if (include_timing && rec.wall_ms) j["wall_ms"] = *rec.wall_ms;
    if (rec.p_input) j["p_input"] = *rec.p_input;
    if (rec.p_exc) j["p_exc"] = *rec.p_exc;
    return j.dump();
}

/// Streaming JSON-lines writer; every line is flushed on write.
class RunLogWriter {
public:
    RunLogWriter(const std::filesystem::path& path, bool include_timing)
        : out_(path, std::ios::trunc), include_timing_(include_timing) {
        if (!out_) throw std::runtime_error("cannot open log for writing: " + path.string());
    }

    void write(const EpochRecord& rec) {
        out_ << epoch_record_json_line(rec, include_timing_) << '\n';
        out_.flush();
        if (!out_) throw std::runtime_error("log write failed");
    }

private:
    std::ofstream out_;
    bool include_timing_;
};

inline std::string run_log_to_jsonl(const RunLog& log, bool include_timing) {
    std::string out;
    for (const EpochRecord& rec : log.epochs) {
        out += epoch_record_json_line(rec, include_timing);
        out += '\n';
    }
    return out;
}

}  // namespace deepstdp

// Scripted tracker speaking the harness line protocol on stdin/stdout.
// Reads the ground truth itself (--gt, --offset) so its predictions match the
// in-process scripted driver. --misbehave breaks the protocol on purpose.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "vista/error.hpp"
#include "vista/synth.hpp"
#include "vista/track_io.hpp"

using nlohmann::json;
using namespace vista;

namespace {

void reply(const json& j) { std::cout << j.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scripted tracker for protocol tests"};
  std::string kind = "perfect";
  std::string gt_path;
  std::string view_text = "fpv";
  int offset = 0;
  std::string misbehave;
  int misbehave_at = 1;
  app.add_option("--kind", kind, "Scripted tracker kind");
  app.add_option("--gt", gt_path, "Ground-truth annotation file")->required();
  app.add_option("--view", view_text, "fpv or tpv");
  app.add_option("--offset", offset, "Frame offset of local frame 0 in the annotation file");
  app.add_option("--misbehave", misbehave,
                 "garbage | wrong-t | two-kinds | crash | hang | bad-exit | chatty-init | silent");
  app.add_option("--misbehave-at", misbehave_at, "Track call on which to misbehave (1-based)");
  CLI11_PARSE(app, argc, argv);

  std::map<int, TargetState> truth;
  try {
    for (TrackEntry& e : read_track_file(gt_path)) truth.emplace(e.t, std::move(e.state));
  } catch (const Error& e) {
    std::cerr << "mock tracker: " << e.what() << "\n";
    return 3;
  }
  ScriptedScript script(ScriptedTracker::parse(kind), parse_view(view_text), [&](int t) -> const TargetState* {
    const auto it = truth.find(t + offset);
    return it == truth.end() ? nullptr : &it->second;
  });

  int tracked = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error&) {
      std::cerr << "mock tracker: bad command line\n";
      return 4;
    }
    const std::string cmd = msg.value("cmd", "");
    if (cmd == "init") {
      script.init(state_from_json(msg));
      if (misbehave == "chatty-init") {
        reply({{"status", "ok"}, {"note", "extra"}});
      } else {
        reply({{"status", "ok"}});
      }
    } else if (cmd == "track") {
      const int t = msg.at("t").get<int>();
      const bool now = ++tracked == misbehave_at;
      if (now && misbehave == "garbage") {
        std::cout << "this is not json" << std::endl;
        continue;
      }
      if (now && misbehave == "crash") return 7;
      if (now && misbehave == "hang") std::this_thread::sleep_for(std::chrono::hours(1));
      if (now && misbehave == "silent") {
        std::this_thread::sleep_for(std::chrono::hours(1));
        continue;
      }
      json out = {{"t", now && misbehave == "wrong-t" ? t + 1 : t}};
      const TargetState pred = script.predict(t);
      if (is_absent(pred)) {
        out["absent"] = true;
      } else {
        state_to_json(pred, out);
      }
      if (now && misbehave == "two-kinds") {
        out["absent"] = true;
        out["box"] = {0, 0, 1, 1};
      }
      reply(out);
    } else if (cmd == "end") {
      return misbehave == "bad-exit" ? 5 : 0;
    } else {
      std::cerr << "mock tracker: unknown command '" << cmd << "'\n";
      return 4;
    }
  }
  return misbehave == "bad-exit" ? 5 : 0;
}

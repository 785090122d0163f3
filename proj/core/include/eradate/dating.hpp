#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eradate/corpus.hpp"
#include "eradate/image.hpp"

namespace eradate {

enum class VoteMode { kMulticlass, kBinary };

struct VoteTally {
  std::vector<int> votes;  // one count per class
  int total = 0;
  int winner = 0;
  VoteMode mode = VoteMode::kMulticlass;
  std::optional<std::pair<int, int>> pair;

  bool operator==(const VoteTally&) const = default;
};

// Counts predictions per class; the winner is the class with most votes,
// the lowest index on ties. Throws EmptyPredictions for no predictions and
// InvalidArgument for labels outside [0, num_classes).
VoteTally vote(std::span<const int> predictions, int num_classes);

// Labels for a batch of crops.
using CropClassifier = std::function<std::vector<int>(const std::vector<Image>&)>;

// Samples crops of `painting` per `spec`, classifies them and tallies the
// votes. In binary mode `pair` must be set and every prediction must be one
// of its two classes.
VoteTally date_painting(const Image& painting, const CropClassifier& classify,
                        const CropSpec& spec, VoteMode mode = VoteMode::kMulticlass,
                        std::optional<std::pair<int, int>> pair = std::nullopt,
                        int num_classes = kNumEras);

struct DatingReport {
  std::string id;
  VoteTally tally;
};

// {"id", "mode", "votes": {era: count}, "winner", "pair"?}
std::string dating_report_json(const DatingReport& report);
// Two columns "era count", one line per class.
std::string vote_histogram_data(const VoteTally& tally);
void write_dating_report(const DatingReport& report, const std::filesystem::path& json_path,
                         const std::filesystem::path& data_path);

}  // namespace eradate

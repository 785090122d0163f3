#include "eradate/dating.hpp"

#include <json.hpp>
#include <sstream>

#include "eradate/error.hpp"

namespace eradate {

namespace {

void write_text(const std::filesystem::path& path, const std::string& s) {
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace

VoteTally vote(std::span<const int> predictions, int num_classes) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyPredictions, "no predictions to vote");
  if (num_classes < 1) throw Error(ErrorCode::kInvalidArgument, "num_classes < 1");
  VoteTally t;
  t.votes.assign(static_cast<std::size_t>(num_classes), 0);
  for (int p : predictions) {
    if (p < 0 || p >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "prediction " + std::to_string(p) +
                                                   " outside [0, " +
                                                   std::to_string(num_classes) + ")");
    }
    ++t.votes[static_cast<std::size_t>(p)];
  }
  t.total = static_cast<int>(predictions.size());
  for (int c = 1; c < num_classes; ++c) {
    if (t.votes[static_cast<std::size_t>(c)] > t.votes[static_cast<std::size_t>(t.winner)]) {
      t.winner = c;
    }
  }
  return t;
}

VoteTally date_painting(const Image& painting, const CropClassifier& classify,
                        const CropSpec& spec, VoteMode mode,
                        std::optional<std::pair<int, int>> pair, int num_classes) {
  if (mode == VoteMode::kBinary && !pair) {
    throw Error(ErrorCode::kInvalidArgument, "binary dating needs an era pair");
  }
  const auto crops = sample_crops(painting, spec);
  const auto predictions = classify(crops);
  if (predictions.size() != crops.size()) {
    throw Error(ErrorCode::kShapeMismatch, "classifier returned the wrong number of labels");
  }
  if (mode == VoteMode::kBinary) {
    for (int p : predictions) {
      if (p != pair->first && p != pair->second) {
        throw Error(ErrorCode::kInvalidArgument, "binary classifier predicted outside its pair");
      }
    }
  }
  VoteTally t = vote(predictions, num_classes);
  t.mode = mode;
  if (mode == VoteMode::kBinary) t.pair = pair;
  return t;
}

std::string dating_report_json(const DatingReport& report) {
  nlohmann::ordered_json j;
  j["id"] = report.id;
  j["mode"] = report.tally.mode == VoteMode::kMulticlass ? "multiclass" : "binary";
  nlohmann::ordered_json votes = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < report.tally.votes.size(); ++c) {
    votes[std::string(era_name(static_cast<int>(c)))] = report.tally.votes[c];
  }
  j["votes"] = votes;
  j["total"] = report.tally.total;
  j["winner"] = std::string(era_name(report.tally.winner));
  if (report.tally.pair) {
    j["pair"] = {std::string(era_name(report.tally.pair->first)),
                 std::string(era_name(report.tally.pair->second))};
  }
  return j.dump(2) + "\n";
}

std::string vote_histogram_data(const VoteTally& tally) {
  std::ostringstream os;
  os << "# era count\n";
  for (std::size_t c = 0; c < tally.votes.size(); ++c) {
    os << era_name(static_cast<int>(c)) << ' ' << tally.votes[c] << '\n';
  }
  return os.str();
}

void write_dating_report(const DatingReport& report, const std::filesystem::path& json_path,
                         const std::filesystem::path& data_path) {
  write_text(json_path, dating_report_json(report));
  write_text(data_path, vote_histogram_data(report.tally));
}

}  // namespace eradate

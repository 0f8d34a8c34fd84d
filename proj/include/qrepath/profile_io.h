#ifndef QREPATH_PROFILE_IO_H_
#define QREPATH_PROFILE_IO_H_

// "qrepath-profile v1": a strategy profile for one game, keyed by player name.
//
//   {
//     "format": "qrepath-profile v1",                 (optional)
//     "players": {
//       "1": {"mixed": [0, 0.5, 0.5]},                 reduced pure strategies
//       "2": {"behavior": {"I1": [0.25, 0.75]}},       per infoset, action order
//       "3": {"realization": [1, 0.4, 0.6]}            per sequence, () first
//     },
//     "t": 0.5,                                        (optional)
//     "nu": [...],                                     (optional, one per infoset)
//     "anchor": {"1": {...}, ...}                      (optional, same forms)
//   }

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qrepath/sequence_form.h"

namespace qrepath {

// Malformed file or a profile that does not fit the game.
class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProfileFile {
  RealizationProfile gamma;
  std::optional<double> t;
  std::optional<Eigen::VectorXd> nu;
  std::optional<RealizationProfile> anchor;
};

ProfileFile ParseProfile(const SequenceSpace& space, std::string_view text);
ProfileFile LoadProfile(const SequenceSpace& space, const std::filesystem::path& path);

// Writes every player in realization form.
std::string SerializeProfile(const SequenceSpace& space, const ProfileFile& profile);

}  // namespace qrepath

#endif  // QREPATH_PROFILE_IO_H_

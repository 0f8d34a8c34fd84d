#ifndef QREPATH_GAME_IO_H_
#define QREPATH_GAME_IO_H_

// Reader and writer for the "qrepath-game v1" JSON game format:
//
//   {
//     "format": "qrepath-game v1",          (optional)
//     "players": ["1", "2"],
//     "root": <node>
//   }
//
// where <node> is one of
//   {"player": "<name>", "infoset": "<id>", "actions": [{"label", "child"}...]}
//   {"player": "chance", "actions": [{"label", "prob", "child"}...]}
//   {"payoffs": [<one real per player>]}
//
// Infoset ids are scoped per player.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qrepath/game.h"

namespace qrepath {

inline constexpr std::string_view kGameFormat = "qrepath-game v1";

// Malformed text (not JSON, or JSON of the wrong shape). Line and column are
// 1-based and refer to the input text; both are 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Throws ParseError for syntax/shape problems and GameError for semantic
// ones (dangling actions, payoff arity, chance sums, infoset actions).
GameTree ParseGame(std::string_view text);
GameTree LoadGame(const std::filesystem::path& path);

// Canonical form: two-space indented JSON, fields in a fixed order.
std::string SerializeGame(const GameTree& game);

}  // namespace qrepath

#endif  // QREPATH_GAME_IO_H_

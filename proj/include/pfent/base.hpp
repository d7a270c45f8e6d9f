#ifndef PFENT_BASE_HPP
#define PFENT_BASE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pfent {

// Dense integer ids; names live in the Signature, elements in Interpretations.
using ConceptId = int;
using RoleId = int;
using IndividualId = int;
using ElemId = int;
using VarId = int;
using Label = int;
using Colour = int;

inline constexpr int kNoId = -1;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string &msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line(line),
          column(column) {}

    int line;
    int column;
};

// Caps that guard the exponential corners; unlocked by PFENT_SAFETY_OVERRIDE=1.
bool safety_override_enabled();

} // namespace pfent

#endif

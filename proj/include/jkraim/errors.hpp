#pragma once

#include <stdexcept>
#include <string>

namespace jkraim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// geometry / linear algebra
class InsufficientGeometry : public Error { using Error::Error; };
class SingularNormalMatrix : public Error { using Error::Error; };
class SubsetRankDeficient : public Error { using Error::Error; };
class InsufficientRedundancy : public Error { using Error::Error; };

// numerics
class GridOverflow : public Error { using Error::Error; };
class TailUnresolved : public Error { using Error::Error; };
class EmConvergenceFailure : public Error { using Error::Error; };
class NoValidPartition : public Error { using Error::Error; };
class EmptySample : public Error { using Error::Error; };
class KeplerNonConvergence : public Error { using Error::Error; };

// input
class UnknownSatellite : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };

} // namespace jkraim

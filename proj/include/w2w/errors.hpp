#pragma once

#include <stdexcept>
#include <string>

namespace w2w {

// Base for every error raised by the engine. Callers that only care about
// "something in the pipeline failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// worldmodel
class NoGridFound : public Error { public: using Error::Error; };

// llm
class ParseFailure : public Error { public: using Error::Error; };
class TransportError : public Error { public: using Error::Error; };
class AuthError : public Error { public: using Error::Error; };
class RateLimited : public Error { public: using Error::Error; };
class ScriptExhausted : public Error { public: using Error::Error; };

// tiles
class DatasetError : public Error { public: using Error::Error; };
class ZeroVector : public Error { public: using Error::Error; };
class DimensionMismatch : public Error { public: using Error::Error; };
class MissingAssignment : public Error { public: using Error::Error; };
class TileSizeMismatch : public Error { public: using Error::Error; };

// eval / pipeline
class GoalUnplaceable : public Error { public: using Error::Error; };
class MissingProtagonist : public Error { public: using Error::Error; };
class EmptyImportantSet : public Error { public: using Error::Error; };

// agent
class ActionParseFailure : public Error { public: using Error::Error; };

}  // namespace w2w

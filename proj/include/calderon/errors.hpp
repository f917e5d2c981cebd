#pragma once

#include <stdexcept>
#include <string>

namespace cald {

// Exit-code classes used by the CLI: 2 invariant failure, 3 config error,
// 4 numerical failure.
enum class ErrorClass { Config = 3, Numerical = 4, Invariant = 2 };

class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, std::string what) : std::runtime_error(std::move(what)), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

private:
  ErrorClass cls_;
};

struct InvalidConfig : Error {
  explicit InvalidConfig(const std::string& w) : Error(ErrorClass::Config, "InvalidConfig: " + w) {}
};
struct TauZero : Error {
  TauZero() : Error(ErrorClass::Config, "TauZero: boundary classification requires tau != 0") {}
};
struct TangentialExit : Error {
  explicit TangentialExit(const std::string& w) : Error(ErrorClass::Numerical, "TangentialExit: " + w) {}
};
struct MaxStepsExceeded : Error {
  explicit MaxStepsExceeded(const std::string& w)
      : Error(ErrorClass::Config, "MaxStepsExceeded: " + w) {}
};
struct ChartFailure : Error {
  explicit ChartFailure(const std::string& w) : Error(ErrorClass::Numerical, "ChartFailure: " + w) {}
};
struct DirichletEigenvalue : Error {
  explicit DirichletEigenvalue(const std::string& w)
      : Error(ErrorClass::Numerical, "DirichletEigenvalue: " + w) {}
};
struct RankDeficient : Error {
  explicit RankDeficient(const std::string& w) : Error(ErrorClass::Numerical, "RankDeficient: " + w) {}
};
struct NotContracting : Error {
  explicit NotContracting(const std::string& w)
      : Error(ErrorClass::Numerical, "NotContracting: " + w) {}
};
struct NearSingular : Error {
  explicit NearSingular(const std::string& w) : Error(ErrorClass::Numerical, "NearSingular: " + w) {}
};
struct SupportViolation : Error {
  explicit SupportViolation(const std::string& w)
      : Error(ErrorClass::Numerical, "SupportViolation: " + w) {}
};
struct BumpOutsideE : Error {
  explicit BumpOutsideE(const std::string& w) : Error(ErrorClass::Config, "BumpOutsideE: " + w) {}
};
struct IndexMismatch : Error {
  explicit IndexMismatch(const std::string& w) : Error(ErrorClass::Config, "IndexMismatch: " + w) {}
};
struct StencilTooShort : Error {
  explicit StencilTooShort(const std::string& w)
      : Error(ErrorClass::Config, "StencilTooShort: " + w) {}
};
struct MetricUnsupported : Error {
  explicit MetricUnsupported(const std::string& w)
      : Error(ErrorClass::Config, "MetricUnsupported: " + w) {}
};
struct AttenuationTooLarge : Error {
  explicit AttenuationTooLarge(const std::string& w)
      : Error(ErrorClass::Config, "AttenuationTooLarge: " + w) {}
};
struct ExtrapolationUnstable : Error {
  explicit ExtrapolationUnstable(const std::string& w)
      : Error(ErrorClass::Numerical, "ExtrapolationUnstable: " + w) {}
};
struct ChecksumMismatch : Error {
  explicit ChecksumMismatch(const std::string& w)
      : Error(ErrorClass::Config, "ChecksumMismatch: " + w) {}
};

}  // namespace cald

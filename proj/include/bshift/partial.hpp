#pragma once

#include <string_view>
#include <utility>
#include <variant>

namespace bshift {

/// Why a windowed evaluation could not be resolved.
enum class Unresolved {
  WindowExhausted,
  TopLevelBoundary,
  TieUnresolved,
  NoCodeAvailable,
};

constexpr std::string_view to_string(Unresolved r) {
  switch (r) {
    case Unresolved::WindowExhausted: return "WindowExhausted";
    case Unresolved::TopLevelBoundary: return "TopLevelBoundary";
    case Unresolved::TieUnresolved: return "TieUnresolved";
    case Unresolved::NoCodeAvailable: return "NoCodeAvailable";
  }
  return "?";
}

/// Either an exact value or the reason it is unavailable. Never a guess.
template <class T>
class Partial {
 public:
  Partial(T value) : v_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Partial(Unresolved reason) : v_(reason) {}  // NOLINT(google-explicit-constructor)

  bool defined() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return defined(); }

  const T& value() const& { return std::get<T>(v_); }
  T&& value() && { return std::get<T>(std::move(v_)); }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  Unresolved reason() const { return std::get<Unresolved>(v_); }

  template <class F>
  auto map(F&& f) const -> Partial<decltype(f(std::declval<const T&>()))> {
    if (!defined()) return reason();
    return f(value());
  }

 private:
  std::variant<T, Unresolved> v_;
};

}  // namespace bshift

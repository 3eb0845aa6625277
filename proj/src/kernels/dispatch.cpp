#include <cstdlib>
#include <string>

#include "posegen/error.hpp"
#include "posegen/kernels.hpp"

namespace posegen::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return avx2::table() != nullptr && __builtin_cpu_supports("avx2") &&
         __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("POSEGEN_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::kScalar;
    if (want == "avx2" && cpu_has_avx2()) return Backend::kAvx2;
  }
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

Backend& current() {
  static Backend b = initial_backend();
  return b;
}

}  // namespace

bool available(Backend b) {
  return b == Backend::kScalar || cpu_has_avx2();
}

const KernelTable& table(Backend b) {
  if (!available(b)) {
    throw ConfigError("kernel backend not available: " +
                      std::string(backend_name(b)));
  }
  return b == Backend::kAvx2 ? *avx2::table() : scalar::table();
}

const KernelTable& active() {
  static thread_local const KernelTable* cached = nullptr;
  static thread_local Backend cached_for = Backend::kScalar;
  const Backend b = current();
  if (!cached || cached_for != b) {
    cached = &table(b);
    cached_for = b;
  }
  return *cached;
}

Backend active_backend() { return current(); }

void set_backend(Backend b) {
  table(b);  // throws if unavailable
  current() = b;
}

std::string_view backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

}  // namespace posegen::kernels

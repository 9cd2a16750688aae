#include "fft.hpp"

#include <fftw3.h>

#include <new>

namespace trialmix::detail {

ComplexFft::ComplexFft(std::size_t n) : n_(n) {
  data_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!data_) throw std::bad_alloc();
  auto* buf = reinterpret_cast<fftw_complex*>(data_);
  forward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

ComplexFft::~ComplexFft() {
  fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_));
  fftw_free(data_);
}

void ComplexFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_)); }
void ComplexFft::inverse() { fftw_execute(static_cast<fftw_plan>(inverse_)); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace trialmix::detail

#pragma once

#include <complex>
#include <cstddef>

namespace trialmix::detail {

// In-place complex FFT of fixed size backed by FFTW. Unnormalised in both
// directions. Not copyable; plans are created once with FFTW_ESTIMATE so the
// chosen codelets do not depend on timing.
class ComplexFft {
 public:
  explicit ComplexFft(std::size_t n);
  ~ComplexFft();
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::size_t size() const { return n_; }
  std::complex<double>* data() { return data_; }
  void forward();
  void inverse();

 private:
  std::size_t n_;
  std::complex<double>* data_;
  void* forward_;
  void* inverse_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace trialmix::detail

#pragma once

#include <stdexcept>
#include <string>

namespace osal {

// Base of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied parameter violates an operation's precondition.
class invalid_argument : public error {
 public:
  using error::error;
};

// Input data is malformed: bad header, non-finite value, duplicate id, ...
class data_error : public error {
 public:
  using error::error;
};

// The annotation budget cannot be split evenly across the clusters.
class divisibility_error : public error {
 public:
  using error::error;
};

// A cluster holds fewer members than its share of the annotation budget.
class cluster_too_small_error : public error {
 public:
  cluster_too_small_error(int cluster, std::size_t size, std::size_t required)
      : error("cluster " + std::to_string(cluster) + " has " + std::to_string(size) +
              " members but " + std::to_string(required) + " are required"),
        cluster_(cluster) {}

  int cluster() const noexcept { return cluster_; }

 private:
  int cluster_;
};

// A numerical stage could not complete (e.g. synthetic centers could not be placed).
class numerical_error : public error {
 public:
  using error::error;
};

}  // namespace osal

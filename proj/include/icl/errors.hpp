#ifndef ICL_ERRORS_HPP_
#define ICL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace icl
{
    // Base for every error raised by the library.
    class Error : public std::runtime_error
    {
      public:
        using std::runtime_error::runtime_error;
    };

    // Malformed task spec, template, featurization or training config.
    class ConfigError : public Error
    {
      public:
        using Error::Error;
    };

    // Caller misuse: empty eval set, oracle in the new-task setting, bad sizes.
    class UsageError : public Error
    {
      public:
        using Error::Error;
    };

    // Probabilities that cannot be normalized, non-finite losses.
    class NumericError : public Error
    {
      public:
        using Error::Error;
    };

    // Dataset and artifact parsing failures.
    class DataError : public Error
    {
      public:
        using Error::Error;
    };

    // Illegal MDP actions and other broken preconditions.
    class ContractViolation : public std::logic_error
    {
      public:
        using std::logic_error::logic_error;
    };

    class BackendError : public Error
    {
      public:
        BackendError(const std::string& what, int attempts = 1, int last_status = 0) :
            Error(what), attempts_(attempts), last_status_(last_status)
        {
        }

        int attempts() const noexcept { return attempts_; }
        int last_status() const noexcept { return last_status_; }

      private:
        int attempts_;
        int last_status_;
    };

    // 401/403: never retried.
    class AuthError : public BackendError
    {
      public:
        using BackendError::BackendError;
    };
}  // namespace icl

#endif  // ICL_ERRORS_HPP_

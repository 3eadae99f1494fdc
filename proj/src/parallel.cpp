#include "foliated/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace foliated {

std::size_t resolve_thread_count(std::optional<std::size_t> requested)
{
    if (requested && *requested > 0)
        return *requested;
    if (char const* env = std::getenv("FOLIATED_THREADS"))
    {
        std::size_t value = 0;
        auto const [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
        if (ec == std::errc{} && *ptr == '\0' && value > 0)
            return value;
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace foliated

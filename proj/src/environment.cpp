#include "ips/environment.hpp"

namespace ips
{

Environment::Environment(SeedScheme seeds, double p, double v, std::uint64_t replica, std::uint64_t env_id,
                         InitialLaw law)
    : seeds_(seeds), p_(p), v_(v), replica_(replica), env_id_(env_id), law_(law)
{
    check_probability(p);
    check_rate(v);
}

void Environment::reset(std::uint64_t replica)
{
    replica_ = replica;
    records_.clear();
    pins_.clear();
}

void Environment::pin(const Edge& e, bool open)
{
    if (records_.count(e))
        throw std::logic_error("edge " + to_string(e) + " was queried before being pinned");
    pins_[e] = open;
}

Environment::Record& Environment::record(const Edge& e)
{
    auto it = records_.find(e);
    if (it != records_.end())
        return it->second;
    Record r;
    r.clock = edge_clock(seeds_, e, p_, v_, replica_, env_id_);
    if (auto pin = pins_.find(e); pin != pins_.end())
        r.initial = pin->second;
    else if (law_ == InitialLaw::all_open)
        r.initial = true;
    else if (law_ == InitialLaw::all_closed)
        r.initial = false;
    else
        r.initial = r.clock.stationary_initial();
    r.state = r.initial;
    r.last = -kInf;
    r.next = r.clock.first_after(0.0).time;
    return records_.emplace(e, r).first->second;
}

void Environment::advance(Record& r, double t)
{
    if (t >= r.last && t < r.next)
        return;
    const EdgeUpdate last = r.clock.last_at_or_before(t);
    r.last = last.time;
    r.state = last.time == -kInf ? r.initial : last.mark;
    r.next = r.clock.first_after(t).time;
}

bool Environment::open(const Edge& e, double t)
{
    Record& r = record(e);
    advance(r, t);
    return r.state;
}

double Environment::next_refresh(const Edge& e, double t)
{
    Record& r = record(e);
    advance(r, t);
    return r.next;
}

double Environment::last_refresh(const Edge& e, double t)
{
    Record& r = record(e);
    advance(r, t);
    return r.last;
}

} // namespace ips

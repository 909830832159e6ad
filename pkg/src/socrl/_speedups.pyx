# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fast paths for the Pac-Boy ensemble and the Catch pair.

Each function reproduces the pure-Python engine exactly: the same step
contract, the same update order, and the same random-draw discipline
(every bounded choice maps one ``next_double`` through ``int(u * n)``;
epsilon-greedy selection always consumes two doubles).  Floating-point
operations are sequenced to match numpy's, so tables, metrics, and
generator states come out bit-identical to the reference path.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef bitgen_t *_bitgen(object generator):
    capsule = generator.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef inline double _nd(bitgen_t *bg):
    return bg.next_double(bg.state)


cdef inline Py_ssize_t _below(bitgen_t *bg, Py_ssize_t n):
    return <Py_ssize_t> (_nd(bg) * n)


cdef inline Py_ssize_t _eps_greedy(double *q, Py_ssize_t m, double eps,
                                   bitgen_t *bg):
    # Two doubles per call, drawn unconditionally, like learn.epsilon_greedy.
    cdef double u_explore = _nd(bg)
    cdef double u_choice = _nd(bg)
    cdef double mx
    cdef Py_ssize_t j, n_ties
    cdef Py_ssize_t ties[16]
    if u_explore < eps:
        return <Py_ssize_t> (u_choice * m)
    mx = q[0]
    for j in range(1, m):
        if q[j] > mx:
            mx = q[j]
    n_ties = 0
    for j in range(m):
        if q[j] == mx:
            ties[n_ties] = j
            n_ties += 1
    return ties[<Py_ssize_t> (u_choice * n_ties)]


cdef inline double _epsilon(double initial, double final, long anneal, long step):
    # Same clamp-then-interpolate expression as EpsilonSchedule.value, so the
    # two engines see bit-identical epsilons.
    cdef double frac
    cdef long s = step
    if anneal == 0:
        return initial
    if s < 0:
        s = 0
    if s > anneal:
        s = anneal
    frac = (<double> s) / (<double> anneal)
    return initial + (final - initial) * frac


def pacboy_phase(double[:, :, ::1] fruit_q, double[:, ::1] ghost_q,
                 long[:, ::1] move_to, long[:, ::1] nbrs, long[::1] deg,
                 long[::1] fruit_at, long pac_start, long[::1] ghost_starts,
                 long max_episode_steps, long n_steps,
                 int learning, int behavior_random,
                 int learn_fruits, int learn_ghosts,
                 double fruit_gamma, double fruit_alpha,
                 double ghost_gamma, double ghost_alpha,
                 double eps_initial, double eps_final, long eps_anneal,
                 long step0, object env_gen, object policy_gen):
    """Run n_steps of the Pac-Boy Q-sum ensemble; tables update in place.

    Returns (episodes, sum_reward, sum_length, sum_success) over the
    episodes completed inside the phase.
    """
    cdef bitgen_t *env_bg = _bitgen(env_gen)
    cdef bitgen_t *pol_bg = _bitgen(policy_gen)
    cdef Py_ssize_t n_slots = fruit_q.shape[0]
    cdef Py_ssize_t n_cells = move_to.shape[0]
    cdef Py_ssize_t n_act = move_to.shape[1]

    cdef unsigned char[128] fruit
    cdef double[8] acc
    cdef long[2] ghosts
    cdef long[2] ghosts_prev
    cdef int[2] contact

    cdef long episodes = 0, sum_length = 0
    cdef double sum_reward = 0.0, sum_success = 0.0
    cdef double ep_reward = 0.0
    cdef long ep_length = 0

    cdef int needs_reset = 1
    cdef long pac = 0, steps_elapsed = 0, remaining = 0, spawned = 0
    cdef long i, f, k, slot, g0, g1, d, s0, s1
    cdef Py_ssize_t a, j, n_rows
    cdef long p1
    cdef double eps, reward, target, mx, r_loc
    cdef int terminal, ate, term_f

    if n_slots > 128:
        raise ValueError("kernel supports at most 128 fruit slots")

    for i in range(n_steps):
        if needs_reset:
            # A reset that draws zero fruits starts terminal and is redrawn.
            remaining = 0
            while remaining == 0:
                remaining = 0
                for f in range(n_slots):
                    fruit[f] = 1 if _nd(env_bg) < 0.5 else 0
                    remaining += fruit[f]
            pac = pac_start
            ghosts[0] = ghost_starts[0]
            ghosts[1] = ghost_starts[1]
            spawned = remaining
            steps_elapsed = 0
            ep_reward = 0.0
            ep_length = 0
            needs_reset = 0

        # -- action selection -------------------------------------------
        if behavior_random:
            a = _below(pol_bg, n_act)
        else:
            n_rows = 0
            for f in range(n_slots):
                if fruit[f]:
                    if n_rows == 0:
                        for j in range(n_act):
                            acc[j] = fruit_q[f, pac, j]
                    else:
                        for j in range(n_act):
                            acc[j] = acc[j] + fruit_q[f, pac, j]
                    n_rows += 1
            for k in range(2):
                s0 = pac * n_cells + ghosts[k]
                if n_rows == 0:
                    for j in range(n_act):
                        acc[j] = ghost_q[s0, j]
                else:
                    for j in range(n_act):
                        acc[j] = acc[j] + ghost_q[s0, j]
                n_rows += 1
            eps = _epsilon(eps_initial, eps_final, eps_anneal, step0 + i) if learning else 0.0
            a = _eps_greedy(acc, n_act, eps, pol_bg)

        # -- environment transition -------------------------------------
        p1 = move_to[pac, a]
        slot = fruit_at[p1]
        ate = 1 if (slot >= 0 and fruit[slot]) else 0
        reward = 0.0
        if ate:
            fruit[slot] = 0
            remaining -= 1
            reward += 1.0
        for k in range(2):
            g0 = ghosts[k]
            d = deg[g0]
            g1 = nbrs[g0, _below(env_bg, d)]
            contact[k] = 1 if (g0 == p1 or g1 == p1) else 0
            if contact[k]:
                reward -= 10.0
            ghosts_prev[k] = g0
            ghosts[k] = g1
        steps_elapsed += 1
        terminal = 1 if (remaining == 0 or steps_elapsed >= max_episode_steps) else 0

        # -- off-policy updates, agents in declaration order ------------
        if learning and learn_fruits:
            for f in range(n_slots):
                if not (fruit[f] or (ate and slot == f)):
                    continue
                r_loc = 1.0 if (ate and slot == f) else 0.0
                term_f = 1 if (terminal or (ate and slot == f)) else 0
                if term_f:
                    target = r_loc
                else:
                    mx = fruit_q[f, p1, 0]
                    for j in range(1, n_act):
                        if fruit_q[f, p1, j] > mx:
                            mx = fruit_q[f, p1, j]
                    target = r_loc + fruit_gamma * mx
                fruit_q[f, pac, a] = fruit_q[f, pac, a] + fruit_alpha * (target - fruit_q[f, pac, a])
        if learning and learn_ghosts:
            for k in range(2):
                s0 = pac * n_cells + ghosts_prev[k]
                s1 = p1 * n_cells + ghosts[k]
                r_loc = -10.0 if contact[k] else 0.0
                if terminal:
                    target = r_loc
                else:
                    mx = ghost_q[s1, 0]
                    for j in range(1, n_act):
                        if ghost_q[s1, j] > mx:
                            mx = ghost_q[s1, j]
                    target = r_loc + ghost_gamma * mx
                ghost_q[s0, a] = ghost_q[s0, a] + ghost_alpha * (target - ghost_q[s0, a])

        pac = p1
        ep_reward += reward
        ep_length += 1
        if terminal:
            episodes += 1
            sum_reward += ep_reward
            sum_length += ep_length
            sum_success += (<double> (spawned - remaining)) / (<double> spawned)
            needs_reset = 1

    return episodes, sum_reward, sum_length, sum_success


cdef inline long _low_state(long ball_col, long ball_row, long paddle,
                            long comm, long n, long window):
    cdef long span = 2 * window + 1
    cdef long cells = span * (window + 1) + 1
    cdef long dx = ball_col - paddle
    cdef long dy = (n - 1) - ball_row
    cdef long cell
    if -window <= dx <= window and dy <= window:
        cell = dy * span + (dx + window)
    else:
        cell = cells - 1
    return comm * cells + cell


def catch_phase(double[:, ::1] high_q, double[:, ::1] low_q,
                long n, long act_interval, long window,
                double bonus, double penalty, int inert_noop,
                double high_gamma, double high_alpha,
                double low_gamma, double low_alpha,
                long n_steps, int learning,
                int learn_high, int learn_low,
                int high_frozen, int low_frozen,
                double eps_initial, double eps_final, long eps_anneal,
                long step0, object env_gen, object high_gen, object low_gen):
    """Run n_steps of the Catch high/low pair; tables update in place.

    Comm symbols are indexed 0 left, 1 no-op, 2 right; the low agent's
    observed-comm component uses 0 for the episode-start none token and
    1 + symbol otherwise.  Returns
    (episodes, sum_reward, sum_length, sum_success, comm_steps).
    """
    cdef bitgen_t *env_bg = _bitgen(env_gen)
    cdef bitgen_t *high_bg = _bitgen(high_gen)
    cdef bitgen_t *low_bg = _bitgen(low_gen)

    cdef long episodes = 0, sum_length = 0, comm_steps = 0
    cdef double sum_reward = 0.0, sum_success = 0.0
    cdef double ep_reward = 0.0
    cdef long ep_length = 0

    cdef int needs_reset = 1
    cdef long ball_col = 0, ball_row = 0, paddle = 0, ep_step = 0
    cdef long last_comm = 0          # observed encoding: 0 none, 1 + symbol
    cdef long held_comm = 0
    cdef long high_s = 0, high_a = 0
    cdef double high_acc = 0.0
    cdef long low_s = 0, low_a = 0
    cdef double low_acc = 0.0

    cdef long i, paddle2, s2
    cdef Py_ssize_t j
    cdef double eps, eps_a, r_flat, r_high, r_low, target, mx
    cdef int terminal

    for i in range(n_steps):
        if needs_reset:
            ball_col = _below(env_bg, n)
            ball_row = 0
            paddle = n // 2
            ep_step = 0
            last_comm = 0
            ep_reward = 0.0
            ep_length = 0
            needs_reset = 0

        eps = _epsilon(eps_initial, eps_final, eps_anneal, step0 + i) if learning else 0.0

        # -- decisions: high (on its interval), then low every step ------
        if ep_step % act_interval == 0:
            high_s = (ball_col * n + ball_row) * n + paddle
            eps_a = 0.0 if high_frozen else eps
            high_a = _eps_greedy(&high_q[high_s, 0], 3, eps_a, high_bg)
            held_comm = high_a
            high_acc = 0.0
        low_s = _low_state(ball_col, ball_row, paddle, last_comm, n, window)
        eps_a = 0.0 if low_frozen else eps
        low_a = _eps_greedy(&low_q[low_s, 0], 3, eps_a, low_bg)
        low_acc = 0.0

        # -- environment transition --------------------------------------
        paddle2 = paddle + (low_a - 1)
        if paddle2 < 0:
            paddle2 = 0
        elif paddle2 > n - 1:
            paddle2 = n - 1
        ball_row += 1
        terminal = 1 if ball_row == n - 1 else 0
        r_flat = 0.0
        if terminal:
            r_flat = 1.0 if ball_col == paddle2 else -1.0

        # -- local rewards ------------------------------------------------
        r_high = r_flat - penalty * (1.0 if held_comm != 1 else 0.0)
        if last_comm == 0 or (inert_noop and last_comm == 2):
            r_low = r_flat
        else:
            r_low = r_flat + bonus * (1.0 if low_a + 1 == last_comm else 0.0)
        high_acc = high_acc + r_high
        low_acc = low_acc + r_low
        if held_comm != 1:
            comm_steps += 1

        # -- window closures, agents in declaration order -----------------
        if terminal or (ep_step + 1) % act_interval == 0:
            if learning and learn_high:
                if terminal:
                    target = high_acc
                else:
                    s2 = (ball_col * n + ball_row) * n + paddle2
                    mx = high_q[s2, 0]
                    for j in range(1, 3):
                        if high_q[s2, j] > mx:
                            mx = high_q[s2, j]
                    target = high_acc + high_gamma * mx
                high_q[high_s, high_a] = high_q[high_s, high_a] + high_alpha * (target - high_q[high_s, high_a])
        if learning and learn_low:
            if terminal:
                target = low_acc
            else:
                s2 = _low_state(ball_col, ball_row, paddle2, 1 + held_comm, n, window)
                mx = low_q[s2, 0]
                for j in range(1, 3):
                    if low_q[s2, j] > mx:
                        mx = low_q[s2, j]
                target = low_acc + low_gamma * mx
            low_q[low_s, low_a] = low_q[low_s, low_a] + low_alpha * (target - low_q[low_s, low_a])

        last_comm = 1 + held_comm
        paddle = paddle2
        ep_step += 1
        ep_reward += r_flat
        ep_length += 1
        if terminal:
            episodes += 1
            sum_reward += ep_reward
            sum_length += ep_length
            sum_success += 1.0 if ball_col == paddle else 0.0
            needs_reset = 1

    return episodes, sum_reward, sum_length, sum_success, comm_steps

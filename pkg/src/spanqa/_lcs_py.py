"""Pure-Python LCS kernel.

Reference implementation of the character-diff inner loop; `spanqa._lcs_fast`
is the compiled twin and must produce identical opcode lists. Opcodes:
0 = keep, 1 = delete (draft-only char), 2 = insert (revision-only char).
"""

KEEP, DELETE, INSERT = 0, 1, 2


def lcs_ops(a: str, b: str) -> list[int]:
    """Opcode list turning `a` into `b` along a longest common subsequence.

    Backtracking is deterministic: on a mismatch it moves in the `a`
    direction whenever M[i-1][j] >= M[i][j-1].
    """
    n, m = len(a), len(b)
    M = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        ai = a[i - 1]
        row = M[i]
        prev = M[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                up = prev[j]
                left = row[j - 1]
                row[j] = up if up >= left else left

    ops = []
    i, j = n, m
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            ops.append(KEEP)
            i -= 1
            j -= 1
        elif M[i - 1][j] >= M[i][j - 1]:
            ops.append(DELETE)
            i -= 1
        else:
            ops.append(INSERT)
            j -= 1
    while i > 0:
        ops.append(DELETE)
        i -= 1
    while j > 0:
        ops.append(INSERT)
        j -= 1
    ops.reverse()
    return ops

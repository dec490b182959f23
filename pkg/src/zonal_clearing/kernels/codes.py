"""Integer codes shared by both kernel backends."""

# variable state
AT_LOWER = 0
AT_UPPER = 1
BASIC = 2

# loop outcome
OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

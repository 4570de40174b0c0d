def total(values):
    num1 = 3
    result = 0
    for v in values:
        result += v * num1
    return result

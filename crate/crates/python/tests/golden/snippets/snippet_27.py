def check(x):
    if x: return True
    return False

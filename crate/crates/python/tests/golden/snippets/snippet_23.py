def log_all(*args, **kwargs):
    print("logging")

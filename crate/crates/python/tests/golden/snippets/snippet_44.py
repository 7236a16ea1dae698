def connect(host, port):
    sock = None
    if host:
        raise Exception("cannot connect to " + host + ":" + str(port))
    return sock

